#include "invkit/inclusion.hpp"

#include <algorithm>
#include <sstream>

namespace invkit {

namespace {

IntervalVector slice(const IntervalVector& v, std::size_t start, std::size_t count)
{
    IntervalVector out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = v[start + i];
    return out;
}

IntervalVector neg(const IntervalVector& v)
{
    IntervalVector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = -v[i];
    return out;
}

void require_inside(const IntervalVector& region, const IntervalVector& face, std::string_view what)
{
    if (face.size() != region.size()) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
    if (!region.contains(face)) {
        std::ostringstream os;
        os << what << ": box " << face << " is not inside localization " << region;
        throw LocalizationError(os.str());
    }
}

}  // namespace

std::optional<IntervalVector> intersect(const IntervalVector& a, const IntervalVector& b)
{
    if (a.size() != b.size()) throw std::invalid_argument("intersect: dimension mismatch");
    IntervalVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double lo = std::max(a[i].lo(), b[i].lo());
        const double hi = std::min(a[i].hi(), b[i].hi());
        if (lo > hi) return std::nullopt;
        out[i] = Interval(lo, hi);
    }
    return out;
}

ClosedLoopSystem::ClosedLoopSystem(std::shared_ptr<const Dynamics> dynamics,
                                   std::shared_ptr<const FeedforwardNetwork> network, IntervalVector wbox)
    : dynamics_(std::move(dynamics)), network_(std::move(network)), wbox_(std::move(wbox))
{
    if (!dynamics_) throw std::invalid_argument("closed loop: dynamics required");
    const Dims& d = dynamics_->dims();
    if (wbox_.size() != d.q) throw std::invalid_argument("closed loop: disturbance box has wrong dimension");
    if (d.p == 0) {
        if (network_) throw std::invalid_argument("closed loop: system has p = 0 but a network was given");
        return;
    }
    if (!network_) throw std::invalid_argument("closed loop: system has inputs but no network");
    if (network_->input_dim() != d.n || network_->output_dim() != d.p) {
        throw std::invalid_argument("closed loop: network maps R^" + std::to_string(network_->input_dim()) + " -> R^" +
                                    std::to_string(network_->output_dim()) + ", system needs R^" + std::to_string(d.n) +
                                    " -> R^" + std::to_string(d.p));
    }
}

const FeedforwardNetwork& ClosedLoopSystem::network() const
{
    if (!network_) throw std::logic_error("closed loop has no network");
    return *network_;
}

Eigen::VectorXd ClosedLoopSystem::control(const Eigen::VectorXd& x) const
{
    if (!network_) return Eigen::VectorXd(0);
    return forward(*network_, x);
}

Eigen::VectorXd ClosedLoopSystem::eval(const Eigen::VectorXd& x, const Eigen::VectorXd& w) const
{
    return dynamics_->eval(x, control(x), w);
}

IntervalVector ClosedLoopSystem::enclose(const Eigen::VectorXd& x, const Eigen::VectorXd& w) const
{
    const IntervalVector xb = IntervalVector::thin(x);
    const IntervalVector ub = network_ ? interval_forward(*network_, xb) : IntervalVector();
    return dynamics_->eval(xb, ub, IntervalVector::thin(w));
}

IntervalVector ClosedLoopSystem::network_bounds(const IntervalVector& box) const
{
    if (!network_) return IntervalVector();
    const IntervalVector crown = nn_inclusion(crown_affine_bounds(*network_, box), box);
    const IntervalVector ibp = interval_forward(*network_, box);
    // Both enclose the same range, so they always overlap.
    return intersect(crown, ibp).value_or(ibp);
}

Localization localize(const ClosedLoopSystem& sys, const IntervalVector& z)
{
    if (z.size() != sys.n()) throw std::invalid_argument("localize: dimension mismatch");
    Localization loc;
    loc.z = z;
    loc.nz = sys.network_bounds(z);
    const Dynamics& dyn = sys.dynamics();
    if (!dyn.has_jacobians()) {
        loc.note = "Jacobian unavailable: " + dyn.jacobian_issue();
        return loc;
    }
    try {
        loc.J = dyn.jacobians(z, loc.nz, sys.wbox());
        loc.x0 = z.midpoint();
        loc.w0 = sys.wbox().midpoint();
        loc.u0 = sys.control(loc.x0);
        for (Eigen::Index i = 0; i < loc.u0.size(); ++i) {
            const auto k = static_cast<std::size_t>(i);
            loc.u0(i) = std::clamp(loc.u0(i), loc.nz[k].lo(), loc.nz[k].hi());
        }
        const IntervalVector f0 =
            dyn.eval(IntervalVector::thin(loc.x0), IntervalVector::thin(loc.u0), IntervalVector::thin(loc.w0));
        IntervalVector r = neg(matvec(loc.J.jx, IntervalVector::thin(loc.x0)));
        if (sys.dims().p > 0) r = r - matvec(loc.J.ju, IntervalVector::thin(loc.u0));
        if (sys.dims().q > 0) r = r + matvec(loc.J.jw, sys.wbox() - IntervalVector::thin(loc.w0));
        loc.R = r + f0;
        loc.jacobian = true;
    } catch (const DomainError& e) {
        loc.jacobian = false;
        loc.note = std::string("Jacobian evaluation failed: ") + e.what();
    }
    return loc;
}

IntervalVector jacobian_based(const Dynamics& dyn, const IntervalVector& box, const Eigen::VectorXd& center)
{
    const Dims& d = dyn.dims();
    if (box.size() != d.total() || static_cast<std::size_t>(center.size()) != d.total()) {
        throw std::invalid_argument("jacobian_based: box and center must cover all n+p+q variables");
    }
    if (!box.contains(center)) throw std::invalid_argument("jacobian_based: center outside box");
    const IntervalVector xb = slice(box, 0, d.n);
    const IntervalVector ub = slice(box, d.n, d.p);
    const IntervalVector wb = slice(box, d.n + d.p, d.q);
    const Eigen::VectorXd xc = center.head(static_cast<Eigen::Index>(d.n));
    const Eigen::VectorXd uc = center.segment(static_cast<Eigen::Index>(d.n), static_cast<Eigen::Index>(d.p));
    const Eigen::VectorXd wc = center.tail(static_cast<Eigen::Index>(d.q));
    const JacobianIntervals J = dyn.jacobians(xb, ub, wb);
    IntervalVector out = dyn.eval(IntervalVector::thin(xc), IntervalVector::thin(uc), IntervalVector::thin(wc));
    out = out + matvec(J.jx, xb - IntervalVector::thin(xc));
    if (d.p > 0) out = out + matvec(J.ju, ub - IntervalVector::thin(uc));
    if (d.q > 0) out = out + matvec(J.jw, wb - IntervalVector::thin(wc));
    return out;
}

IntervalVector closed_loop_jacobian_inclusion(const ClosedLoopSystem& sys, const Localization& loc,
                                              const AffineRelaxation& rel, const IntervalVector& face)
{
    if (!loc.jacobian) throw std::logic_error("closed_loop_jacobian_inclusion: " + loc.note);
    require_inside(loc.z, face, "closed_loop_jacobian_inclusion");
    if (sys.dims().p == 0) return matvec(loc.J.jx, face) + loc.R;
    require_inside(rel.region, face, "closed_loop_jacobian_inclusion (relaxation region)");
    const IntervalMatrix M = loc.J.jx + matmul(loc.J.ju, rel.C);
    return matvec(M, face) + matvec(loc.J.ju, IntervalVector(rel.d_lo, rel.d_hi)) + loc.R;
}

IntervalVector closed_loop_jacobian_inclusion(const ClosedLoopSystem& sys, const IntervalVector& z,
                                              const IntervalVector& face)
{
    const Localization loc = localize(sys, z);
    const AffineRelaxation rel = sys.has_network() ? crown_affine_bounds(sys.network(), face) : AffineRelaxation{};
    return closed_loop_jacobian_inclusion(sys, loc, rel, face);
}

IntervalVector closed_loop_natural_inclusion(const ClosedLoopSystem& sys, const IntervalVector& face)
{
    if (face.size() != sys.n()) throw std::invalid_argument("closed_loop_natural_inclusion: dimension mismatch");
    const IntervalVector ub = sys.has_network() ? interval_forward(sys.network(), face) : IntervalVector();
    return sys.dynamics().eval(face, ub, sys.wbox());
}

InclusionMode parse_inclusion_mode(std::string_view text)
{
    if (text == "jacobian") return InclusionMode::jacobian;
    if (text == "natural") return InclusionMode::natural;
    throw std::invalid_argument("unknown inclusion '" + std::string(text) + "' (expected jacobian|natural)");
}

BoxInclusion::BoxInclusion(ClosedLoopSystem sys, const IntervalVector& region, InclusionMode mode)
    : sys_(std::move(sys)), mode_(mode)
{
    if (mode_ == InclusionMode::jacobian) {
        loc_ = localize(sys_, region);
    } else {
        loc_.z = region;
    }
}

IntervalVector BoxInclusion::evaluate(const IntervalVector& face) const
{
    require_inside(loc_.z, face, "BoxInclusion");
    if (mode_ == InclusionMode::jacobian && loc_.jacobian) {
        const AffineRelaxation rel = sys_.has_network() ? crown_affine_bounds(sys_.network(), face) : AffineRelaxation{};
        return closed_loop_jacobian_inclusion(sys_, loc_, rel, face);
    }
    return closed_loop_natural_inclusion(sys_, face);
}

std::shared_ptr<const LocalizedInclusion> BoxInclusion::relocalize(const IntervalVector& region) const
{
    return std::make_shared<BoxInclusion>(sys_, region, mode_);
}

std::string BoxInclusion::construction() const
{
    return mode_ == InclusionMode::jacobian && loc_.jacobian ? "jacobian" : "natural";
}

}  // namespace invkit
