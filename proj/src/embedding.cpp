#include "invkit/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace invkit {

std::string format_double(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string_view to_string(Verdict v) { return v == Verdict::invariant ? "invariant" : "inconclusive"; }

Eigen::VectorXd embedding_rhs(const EmbeddingSystem& es, const EmbeddingState& s)
{
    const std::size_t n = es.dim();
    if (s.size() != n) throw std::invalid_argument("embedding_rhs: state dimension mismatch");
    const IntervalVector box = s.box();
    if (!es.incl->region().contains(box)) {
        std::ostringstream os;
        os << "embedding_rhs: box " << box << " is not inside localization " << es.incl->region();
        throw LocalizationError(os.str());
    }
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(2 * n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        IntervalVector face = box;
        face[i] = Interval(s.lower(ii));
        rhs(ii) = es.incl->evaluate(face)[i].lo();
        face[i] = Interval(s.upper(ii));
        rhs(static_cast<Eigen::Index>(n) + ii) = es.incl->evaluate(face)[i].hi();
    }
    return rhs;
}

InvarianceCertificate check_invariance(const EmbeddingSystem& es, const IntervalVector& box)
{
    InvarianceCertificate cert;
    cert.box = box;
    cert.rhs = embedding_rhs(es, EmbeddingState(box));
    cert.condition_holds = se_nonnegative(cert.rhs);
    cert.sound_rounding = rounding_mode() == RoundingMode::sound;
    cert.verdict = cert.condition_holds && cert.sound_rounding ? Verdict::invariant : Verdict::inconclusive;
    cert.construction = es.incl->construction();
    cert.note = es.incl->note();
    cert.localization = es.incl->localization();
    return cert;
}

EmbeddingSystem refine_localization(const EmbeddingSystem& es, const EmbeddingState& s)
{
    return EmbeddingSystem{es.incl->relocalize(s.box())};
}

namespace {

EmbeddingState euler_step(const EmbeddingState& s, const Eigen::VectorXd& rhs, double h)
{
    // Unchecked on purpose: callers inspect the corners and report a bad step.
    const Eigen::Index n = s.lower.size();
    EmbeddingState out;
    out.lower = s.lower + h * rhs.head(n);
    out.upper = s.upper + h * rhs.tail(n);
    return out;
}

bool valid_corners(const EmbeddingState& s)
{
    return s.lower.allFinite() && s.upper.allFinite() && (s.lower.array() <= s.upper.array()).all();
}

}  // namespace

NestedFamily integrate_forward(const EmbeddingSystem& es, const EmbeddingState& s0, const ForwardOptions& opt)
{
    if (!(opt.h > 0.0)) throw std::invalid_argument("integrate_forward: step must be positive");
    NestedFamily fam;
    InvarianceCertificate cert = check_invariance(es, s0.box());
    if (cert.verdict != Verdict::invariant) {
        throw std::invalid_argument("integrate_forward: initial box does not certify");
    }
    EmbeddingSystem cur = es;
    EmbeddingState s = s0;
    fam.members.push_back({0.0, s, cert});
    fam.status = "max_steps";
    for (std::size_t k = 1;; ++k) {
        if (cert.rhs.lpNorm<Eigen::Infinity>() < opt.conv_tol) {
            fam.converged = true;
            fam.equilibrium = s;
            fam.status = "converged";
            break;
        }
        if (k > opt.max_steps) break;
        EmbeddingState next = euler_step(s, cert.rhs, opt.h);
        if (!valid_corners(next) || !se_leq(s, next)) {
            fam.status = "aborted";
            fam.diagnostic = "step " + std::to_string(k) + " broke SE-monotonicity (step size too large?)";
            break;
        }
        EmbeddingSystem candidate = opt.refine ? refine_localization(cur, next) : cur;
        InvarianceCertificate next_cert = check_invariance(candidate, next.box());
        if (next_cert.verdict != Verdict::invariant) {
            fam.status = "certificate_failed";
            fam.diagnostic = "box at step " + std::to_string(k) + " did not re-certify";
            break;
        }
        cur = std::move(candidate);
        s = std::move(next);
        cert = std::move(next_cert);
        fam.members.push_back({static_cast<double>(k) * opt.h, s, cert});
    }
    return fam;
}

NestedFamily integrate_backward(const EmbeddingSystem& es, const EmbeddingState& s0,
                                const std::function<bool(const IntervalVector&)>& inside, const BackwardOptions& opt)
{
    if (!(opt.h > 0.0)) throw std::invalid_argument("integrate_backward: step must be positive");
    NestedFamily fam;
    InvarianceCertificate cert = check_invariance(es, s0.box());
    if (cert.verdict != Verdict::invariant) {
        fam.status = "initial_not_certified";
        return fam;
    }
    EmbeddingSystem cur = es;
    EmbeddingState s = s0;
    fam.status = "max_steps";
    for (std::size_t k = 1; k <= opt.max_steps; ++k) {
        EmbeddingState prev_step = euler_step(s, -cert.rhs, opt.h);
        if (!valid_corners(prev_step)) {
            fam.status = "aborted";
            fam.diagnostic = "non-finite or inverted box at backward step " + std::to_string(k);
            break;
        }
        if (prev_step.lower == s.lower && prev_step.upper == s.upper) {
            fam.status = "stalled";
            break;
        }
        if (!inside(prev_step.box())) {
            fam.status = "left_region";
            break;
        }
        InvarianceCertificate next_cert;
        EmbeddingSystem candidate = cur;
        try {
            candidate = opt.refine ? refine_localization(cur, prev_step) : cur;
            next_cert = check_invariance(candidate, prev_step.box());
        } catch (const LocalizationError& e) {
            fam.status = "left_region";
            fam.diagnostic = e.what();
            break;
        }
        if (next_cert.verdict != Verdict::invariant) {
            fam.status = "condition_failed";
            break;
        }
        cur = std::move(candidate);
        s = std::move(prev_step);
        cert = std::move(next_cert);
        fam.members.push_back({-static_cast<double>(k) * opt.h, s, cert});
    }
    std::reverse(fam.members.begin(), fam.members.end());
    return fam;
}

NestedFamily integrate_backward(const EmbeddingSystem& es, const EmbeddingState& s0, const IntervalVector& bound,
                                const BackwardOptions& opt)
{
    return integrate_backward(es, s0, [&](const IntervalVector& box) { return bound.contains(box); }, opt);
}

NestedFamily merge(const NestedFamily& backward, const NestedFamily& forward)
{
    NestedFamily out = forward;
    out.members = backward.members;
    out.members.insert(out.members.end(), forward.members.begin(), forward.members.end());
    std::stable_sort(out.members.begin(), out.members.end(),
                     [](const FamilyMember& a, const FamilyMember& b) { return a.t < b.t; });
    return out;
}

bool is_nested(const NestedFamily& family)
{
    for (std::size_t k = 1; k < family.members.size(); ++k) {
        if (!se_leq(family.members[k - 1].state, family.members[k].state)) return false;
    }
    return true;
}

std::string family_csv(const NestedFamily& family, const std::string& prefix)
{
    std::ostringstream os;
    const std::size_t n = family.members.empty() ? 0 : family.members.front().state.size();
    os << "t";
    for (std::size_t i = 1; i <= n; ++i) os << ',' << prefix << i << "_lo";
    for (std::size_t i = 1; i <= n; ++i) os << ',' << prefix << i << "_hi";
    os << ",certified\n";
    for (const FamilyMember& m : family.members) {
        os << format_double(m.t);
        for (Eigen::Index i = 0; i < m.state.lower.size(); ++i) os << ',' << format_double(m.state.lower(i));
        for (Eigen::Index i = 0; i < m.state.upper.size(); ++i) os << ',' << format_double(m.state.upper(i));
        os << ',' << (m.certificate.verdict == Verdict::invariant ? 1 : 0) << '\n';
    }
    return os.str();
}

}  // namespace invkit
