#include "invkit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace invkit {

namespace {

constexpr std::size_t kMaxCorners = 64;

const std::vector<unsigned>& primes()
{
    static const std::vector<unsigned> p = [] {
        std::vector<unsigned> out;
        for (unsigned c = 2; out.size() < 256; ++c) {
            bool prime = true;
            for (unsigned d : out) {
                if (d * d > c) break;
                if (c % d == 0) {
                    prime = false;
                    break;
                }
            }
            if (prime) out.push_back(c);
        }
        return out;
    }();
    return p;
}

double radical_inverse(std::uint64_t index, unsigned base)
{
    double result = 0.0;
    double f = 1.0 / base;
    while (index > 0) {
        result += f * static_cast<double>(index % base);
        index /= base;
        f /= base;
    }
    return result;
}

/// Disturbance set for boundary sampling: corners first, then uniform draws.
struct DisturbanceSampler {
    IntervalVector wbox;
    std::vector<Eigen::VectorXd> corners;
    std::size_t uniform = 0;
    CounterRng rng;

    DisturbanceSampler(const IntervalVector& wb, std::size_t w_uniform, std::uint64_t seed)
        : wbox(wb), uniform(w_uniform), rng(seed, 0xd15c0)
    {
        const std::size_t q = wb.size();
        if (q == 0) {
            corners.emplace_back(0);
            uniform = 0;
            return;
        }
        const bool all = q < 7;
        const std::size_t count = all ? (std::size_t{1} << q) : kMaxCorners;
        for (std::size_t c = 0; c < count; ++c) {
            Eigen::VectorXd w(static_cast<Eigen::Index>(q));
            for (std::size_t i = 0; i < q; ++i) {
                const bool upper = all ? ((c >> i) & 1U) != 0 : (rng.bits(c * q + i) & 1U) != 0;
                w(static_cast<Eigen::Index>(i)) = upper ? wb[i].hi() : wb[i].lo();
            }
            corners.push_back(std::move(w));
        }
        std::sort(corners.begin(), corners.end(), [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
            return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
        });
        corners.erase(std::unique(corners.begin(), corners.end()), corners.end());
    }

    std::size_t size() const { return corners.size() + uniform; }

    Eigen::VectorXd at(std::size_t point, std::size_t k) const
    {
        if (k < corners.size()) return corners[k];
        const std::size_t q = wbox.size();
        Eigen::VectorXd w(static_cast<Eigen::Index>(q));
        const std::uint64_t base = (static_cast<std::uint64_t>(point) * uniform + (k - corners.size())) * q;
        for (std::size_t i = 0; i < q; ++i) w(static_cast<Eigen::Index>(i)) = lerp_in(wbox[i], rng.uniform(base + i));
        return w;
    }
};

/// Calls fn(values) for every point of the product grid, with values laid out
/// per the given axes.
template <typename Fn>
void for_each_grid_point(const std::vector<std::vector<double>>& axes, Fn&& fn)
{
    const std::size_t d = axes.size();
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> values(d);
    for (std::size_t i = 0; i < d; ++i) {
        if (axes[i].empty()) return;
        values[i] = axes[i][0];
    }
    while (true) {
        fn(values);
        std::size_t i = 0;
        for (; i < d; ++i) {
            if (++idx[i] < axes[i].size()) {
                values[i] = axes[i][idx[i]];
                break;
            }
            idx[i] = 0;
            values[i] = axes[i][0];
        }
        if (i == d) return;
    }
}

void check_budget(std::size_t m, std::size_t dims, double budget, double multiplier, const char* what)
{
    const double count = multiplier * std::pow(static_cast<double>(m + 1), static_cast<double>(dims));
    if (count > budget) {
        std::ostringstream os;
        os << what << ": grid of " << count << " points exceeds budget " << budget;
        throw std::length_error(os.str());
    }
}

Paralleletope identity_set(const IntervalVector& box)
{
    const auto n = static_cast<Eigen::Index>(box.size());
    return {Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n), box};
}

}  // namespace

std::uint64_t CounterRng::mix(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double lerp_in(const Interval& iv, double t)
{
    if (t >= 1.0) return iv.hi();
    const double v = iv.lo() + t * (iv.hi() - iv.lo());
    return std::clamp(v, iv.lo(), iv.hi());
}

double BoundaryReport::worst_margin() const
{
    double worst = std::numeric_limits<double>::infinity();
    for (const FacetMargin& f : facets) worst = std::min(worst, f.worst_inward_margin);
    return worst;
}

Interval normal_component(const ClosedLoopSystem& sys, const IntervalMatrix& T, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& w, std::size_t axis)
{
    const IntervalVector fx = sys.enclose(x, w);
    Interval acc = T(axis, 0) * fx[0];
    for (std::size_t j = 1; j < fx.size(); ++j) acc = acc + T(axis, j) * fx[j];
    return acc;
}

BoundaryReport boundary_check(const ClosedLoopSystem& sys, const Paralleletope& set, const BoundaryOptions& opt)
{
    const std::size_t n = set.dim();
    if (n != sys.n()) throw std::invalid_argument("boundary_check: set dimension differs from system");
    if (n + 1 > primes().size()) throw std::invalid_argument("boundary_check: dimension too large");
    const IntervalMatrix Tbox = enclose_inverse(set.T, set.Tinv);
    const DisturbanceSampler wsampler(sys.wbox(), opt.w_uniform, opt.seed);
    const std::size_t per_facet = std::max<std::size_t>(1, (opt.n_samples + 2 * n - 1) / (2 * n));

    BoundaryReport report;
    report.w_per_point = wsampler.size();
    std::size_t point_id = 0;
    for (std::size_t axis = 0; axis < n; ++axis) {
        for (int side : {-1, 1}) {
            const CounterRng shift(opt.seed, 2 * axis + (side > 0 ? 1 : 0) + 1);
            FacetMargin margin{axis, side, per_facet, std::numeric_limits<double>::infinity()};
            Eigen::VectorXd y(static_cast<Eigen::Index>(n));
            for (std::size_t s = 0; s < per_facet; ++s, ++point_id) {
                std::size_t dim = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == axis) {
                        y(static_cast<Eigen::Index>(i)) = side < 0 ? set.ybox[i].lo() : set.ybox[i].hi();
                        continue;
                    }
                    double u = radical_inverse(s + 1, primes()[dim]) + shift.uniform(dim);
                    if (u >= 1.0) u -= 1.0;
                    y(static_cast<Eigen::Index>(i)) = lerp_in(set.ybox[i], u);
                    ++dim;
                }
                const Eigen::VectorXd x = set.Tinv * y;
                for (std::size_t k = 0; k < wsampler.size(); ++k) {
                    const Eigen::VectorXd w = wsampler.at(point_id, k);
                    const Eigen::VectorXd f = sys.eval(x, w);
                    const double normal = set.T.row(static_cast<Eigen::Index>(axis)).dot(f);
                    const double inward = side < 0 ? normal : -normal;
                    margin.worst_inward_margin = std::min(margin.worst_inward_margin, inward);
                    if (inward < 0.0 && report.witnesses.size() < opt.max_witnesses) {
                        const Interval comp = normal_component(sys, Tbox, x, w, axis);
                        const Interval outward = side < 0 ? -comp : comp;
                        if (outward.lo() > 0.0) report.witnesses.push_back({x, w, axis, side, outward});
                    }
                }
            }
            report.facets.push_back(margin);
        }
    }
    report.n_samples = point_id;
    return report;
}

BoundaryReport boundary_check(const ClosedLoopSystem& sys, const IntervalVector& box, const BoundaryOptions& opt)
{
    return boundary_check(sys, identity_set(box), opt);
}

std::vector<bool> replay_witnesses(const ClosedLoopSystem& sys, const Paralleletope& set,
                                   const std::vector<BoundaryWitness>& witnesses)
{
    const IntervalMatrix Tbox = enclose_inverse(set.T, set.Tinv);
    std::vector<bool> out;
    out.reserve(witnesses.size());
    for (const BoundaryWitness& wit : witnesses) {
        if (wit.axis >= set.dim() || static_cast<std::size_t>(wit.x.size()) != set.dim() ||
            static_cast<std::size_t>(wit.w.size()) != sys.dims().q) {
            out.push_back(false);
            continue;
        }
        const Interval comp = normal_component(sys, Tbox, wit.x, wit.w, wit.axis);
        const Interval outward = wit.side < 0 ? -comp : comp;
        out.push_back(outward.lo() > 0.0);
    }
    return out;
}

std::vector<double> grid_points(const Interval& iv, std::size_t m)
{
    if (m == 0) throw std::invalid_argument("grid_points: need at least one subdivision");
    if (iv.is_thin()) return {iv.lo()};
    const double step = (iv.hi() - iv.lo()) / static_cast<double>(m);
    std::vector<double> out(m + 1);
    for (std::size_t k = 0; k < m; ++k) out[k] = iv.lo() + static_cast<double>(k) * step;
    out[m] = iv.hi();
    return out;
}

IntervalVector grid_minimal_inclusion(const ClosedLoopSystem& sys, const IntervalVector& box, std::size_t m,
                                      double budget)
{
    const std::size_t n = sys.n();
    const std::size_t q = sys.dims().q;
    if (box.size() != n) throw std::invalid_argument("grid_minimal_inclusion: dimension mismatch");
    check_budget(m, n + q, budget, 1.0, "grid_minimal_inclusion");
    std::vector<std::vector<double>> axes;
    for (const Interval& iv : box) axes.push_back(grid_points(iv, m));
    for (const Interval& iv : sys.wbox()) axes.push_back(grid_points(iv, m));
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), std::numeric_limits<double>::infinity());
    Eigen::VectorXd hi = -lo;
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    Eigen::VectorXd w(static_cast<Eigen::Index>(q));
    for_each_grid_point(axes, [&](const std::vector<double>& v) {
        for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i)) = v[i];
        for (std::size_t i = 0; i < q; ++i) w(static_cast<Eigen::Index>(i)) = v[n + i];
        const Eigen::VectorXd f = sys.eval(x, w);
        lo = lo.cwiseMin(f);
        hi = hi.cwiseMax(f);
    });
    return {lo, hi};
}

BoundaryReport grid_face_check(const ClosedLoopSystem& sys, const IntervalVector& box, std::size_t m,
                               std::size_t max_witnesses, double budget)
{
    const std::size_t n = sys.n();
    const std::size_t q = sys.dims().q;
    if (box.size() != n) throw std::invalid_argument("grid_face_check: dimension mismatch");
    check_budget(m, n - 1 + q, budget, static_cast<double>(2 * n), "grid_face_check");
    const IntervalMatrix I(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
    BoundaryReport report;
    std::vector<std::vector<double>> axes;
    for (const Interval& iv : box) axes.push_back(grid_points(iv, m));
    for (const Interval& iv : sys.wbox()) axes.push_back(grid_points(iv, m));
    report.w_per_point = 1;
    for (const Interval& iv : sys.wbox()) report.w_per_point *= grid_points(iv, m).size();
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    Eigen::VectorXd w(static_cast<Eigen::Index>(q));
    for (std::size_t axis = 0; axis < n; ++axis) {
        for (int side : {-1, 1}) {
            std::vector<std::vector<double>> face = axes;
            face[axis] = {side < 0 ? box[axis].lo() : box[axis].hi()};
            FacetMargin margin{axis, side, 0, std::numeric_limits<double>::infinity()};
            for_each_grid_point(face, [&](const std::vector<double>& v) {
                for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i)) = v[i];
                for (std::size_t i = 0; i < q; ++i) w(static_cast<Eigen::Index>(i)) = v[n + i];
                const Eigen::VectorXd f = sys.eval(x, w);
                const double inward = side < 0 ? f(static_cast<Eigen::Index>(axis)) : -f(static_cast<Eigen::Index>(axis));
                margin.worst_inward_margin = std::min(margin.worst_inward_margin, inward);
                if (inward < 0.0 && report.witnesses.size() < max_witnesses) {
                    const Interval comp = normal_component(sys, I, x, w, axis);
                    const Interval outward = side < 0 ? -comp : comp;
                    if (outward.lo() > 0.0) report.witnesses.push_back({x, w, axis, side, outward});
                }
            });
            std::size_t count = 1;
            for (std::size_t i = 0; i < n; ++i) count *= i == axis ? 1 : axes[i].size();
            margin.samples = count;
            report.n_samples += count;
            report.facets.push_back(margin);
        }
    }
    return report;
}

TrajectoryBundle monte_carlo_trajectories(const ClosedLoopSystem& sys, const Paralleletope& set0, std::size_t count,
                                          double horizon, double h, std::uint64_t seed)
{
    if (!(h > 0.0) || !(horizon >= 0.0)) throw std::invalid_argument("monte_carlo_trajectories: bad horizon or step");
    const std::size_t n = set0.dim();
    if (n != sys.n()) throw std::invalid_argument("monte_carlo_trajectories: set dimension differs from system");
    const std::size_t q = sys.dims().q;
    const auto steps = static_cast<std::size_t>(std::llround(horizon / h));
    constexpr int kSub = 10;
    const double hs = h / kSub;

    TrajectoryBundle out;
    out.h = h;
    for (std::size_t k = 0; k <= steps; ++k) out.times.push_back(static_cast<double>(k) * h);
    out.paths.resize(count);
    out.divergent.assign(count, false);
    for (std::size_t j = 0; j < count; ++j) {
        const CounterRng rng(seed, 0x7a11 + j);
        Eigen::VectorXd y(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = lerp_in(set0.ybox[i], rng.uniform(i));
        Eigen::VectorXd x = set0.Tinv * y;
        std::vector<Eigen::VectorXd>& path = out.paths[j];
        path.push_back(x);
        Eigen::VectorXd w(static_cast<Eigen::Index>(q));
        for (std::size_t k = 0; k < steps; ++k) {
            for (std::size_t i = 0; i < q; ++i) {
                w(static_cast<Eigen::Index>(i)) = lerp_in(sys.wbox()[i], rng.uniform(n + k * q + i));
            }
            const auto f = [&](const Eigen::VectorXd& s) { return sys.eval(s, w); };
            for (int sub = 0; sub < kSub; ++sub) {
                const Eigen::VectorXd k1 = f(x);
                const Eigen::VectorXd k2 = f(x + 0.5 * hs * k1);
                const Eigen::VectorXd k3 = f(x + 0.5 * hs * k2);
                const Eigen::VectorXd k4 = f(x + hs * k3);
                x += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            if (!x.allFinite()) {
                out.divergent[j] = true;
                break;
            }
            path.push_back(x);
        }
    }
    return out;
}

ContainmentReport check_containment(const TrajectoryBundle& bundle, const NestedFamily& family, const Eigen::MatrixXd& T)
{
    ContainmentReport report;
    for (bool d : bundle.divergent) report.divergent += d ? 1 : 0;
    for (const FamilyMember& m : family.members) {
        if (m.t < 0.0) continue;
        const auto k = static_cast<std::size_t>(std::llround(m.t / bundle.h));
        if (k >= bundle.times.size() || std::abs(bundle.times[k] - m.t) > 1e-9 * std::max(1.0, m.t)) continue;
        const IntervalVector box = m.state.box();
        for (std::size_t j = 0; j < bundle.paths.size(); ++j) {
            if (k >= bundle.paths[j].size()) continue;
            ++report.checks;
            const Eigen::VectorXd y = T * bundle.paths[j][k];
            if (box.contains(y)) continue;
            if (report.violations++ == 0) {
                std::ostringstream os;
                os << "trajectory " << j << " at t=" << format_double(m.t) << " is outside member " << box;
                report.first_violation = os.str();
            }
        }
    }
    return report;
}

}  // namespace invkit
