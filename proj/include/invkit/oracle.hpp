#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "invkit/embedding.hpp"
#include "invkit/inclusion.hpp"
#include "invkit/paralleletope.hpp"

namespace invkit {

/// Counter-based generator: value k of stream s depends only on (seed, s, k).
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}
    std::uint64_t bits(std::uint64_t counter) const { return mix(key_ + counter * 0x9e3779b97f4a7c15ULL); }
    /// Uniform in [0, 1).
    double uniform(std::uint64_t counter) const { return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53; }

    static std::uint64_t mix(std::uint64_t z);

private:
    std::uint64_t key_;
};

/// Point of [lo, hi] at fraction t in [0, 1]; hi itself for t == 1.
double lerp_in(const Interval& iv, double t);

struct FacetMargin {
    std::size_t axis = 0;
    int side = -1;  // -1 lower facet, +1 upper facet
    std::size_t samples = 0;
    double worst_inward_margin = 0.0;  // min over samples of the inward normal component
};

struct BoundaryWitness {
    Eigen::VectorXd x;
    Eigen::VectorXd w;
    std::size_t axis = 0;
    int side = -1;
    Interval outward;  // enclosure of the outward normal component, strictly positive
};

struct BoundaryReport {
    std::size_t n_samples = 0;  // facet points over all facets
    std::size_t w_per_point = 0;
    std::vector<FacetMargin> facets;
    std::vector<BoundaryWitness> witnesses;

    bool clean() const { return witnesses.empty(); }
    double worst_margin() const;
};

struct BoundaryOptions {
    std::size_t n_samples = 100000;  // total facet points, split evenly over the 2n facets
    std::size_t w_uniform = 2;       // uniform disturbance draws per point, on top of the corners
    std::uint64_t seed = 0;
    std::size_t max_witnesses = 16;
};

/// Nagumo-style sampling of the boundary of {x : Tx in ybox}. A box is the
/// case T = I. Only strictly outward enclosures count as witnesses.
BoundaryReport boundary_check(const ClosedLoopSystem& sys, const Paralleletope& set, const BoundaryOptions& opt);
BoundaryReport boundary_check(const ClosedLoopSystem& sys, const IntervalVector& box, const BoundaryOptions& opt);

/// Enclosure of (T f(x, N(x), w))_axis, with T through its inverse enclosure.
Interval normal_component(const ClosedLoopSystem& sys, const IntervalMatrix& T, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& w, std::size_t axis);

/// Re-evaluates each witness; true where it is still strictly outward.
std::vector<bool> replay_witnesses(const ClosedLoopSystem& sys, const Paralleletope& set,
                                   const std::vector<BoundaryWitness>& witnesses);

/// Points lo + k (hi - lo) / m for k = 0..m, with the last point pinned to hi.
std::vector<double> grid_points(const Interval& iv, std::size_t m);

/// Min and max of f(x, N(x), w) over a grid of the box times a grid of the
/// disturbance box, m subdivisions per dimension. Throws std::length_error
/// when (m + 1)^(n + q) exceeds the budget.
IntervalVector grid_minimal_inclusion(const ClosedLoopSystem& sys, const IntervalVector& box, std::size_t m,
                                      double budget = 1e7);

/// Grid search on the 2n faces of a box for strictly outward points.
BoundaryReport grid_face_check(const ClosedLoopSystem& sys, const IntervalVector& box, std::size_t m,
                               std::size_t max_witnesses = 16, double budget = 1e7);

struct TrajectoryBundle {
    double h = 0.0;                                  // recording interval and disturbance hold time
    std::vector<double> times;                       // k h
    std::vector<std::vector<Eigen::VectorXd>> paths;  // paths[j][k]
    std::vector<bool> divergent;
};

/// RK4 with ten substeps per h; w is uniform in wbox and held for each h.
/// Initial states are uniform in the set.
TrajectoryBundle monte_carlo_trajectories(const ClosedLoopSystem& sys, const Paralleletope& set0, std::size_t count,
                                          double horizon, double h, std::uint64_t seed);

struct ContainmentReport {
    std::size_t checks = 0;
    std::size_t violations = 0;
    std::size_t divergent = 0;
    std::string first_violation;

    bool clean() const { return violations == 0 && divergent == 0; }
};

/// Checks T x(t) against every family member whose time matches a recorded
/// time. Members with negative t are skipped.
ContainmentReport check_containment(const TrajectoryBundle& bundle, const NestedFamily& family, const Eigen::MatrixXd& T);

}  // namespace invkit
