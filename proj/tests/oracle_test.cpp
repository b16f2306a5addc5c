#include <gtest/gtest.h>

#include <random>
#include <set>

#include "invkit/config.hpp"
#include "invkit/oracle.hpp"
#include "support/random_models.hpp"

using namespace invkit;
namespace it = invkit::testing;

namespace {

const std::filesystem::path kConfigs = INVKIT_CONFIGS;

ClosedLoopSystem skew2d()
{
    auto dyn = std::make_shared<const Dynamics>(parse_vector_field({"-x1 + 5*x2", "-2*x2 + w1"}, Dims{2, 0, 1}));
    return ClosedLoopSystem(dyn, nullptr, IntervalVector{Interval(-0.01, 0.01)});
}

ClosedLoopSystem contracting(double rate)
{
    auto dyn = std::make_shared<const Dynamics>(
        parse_vector_field({"-" + format_double(rate) + "*x1 + w1", "-x2 + 0.2*x1"}, Dims{2, 0, 1}));
    return ClosedLoopSystem(dyn, nullptr, IntervalVector{Interval(-0.1, 0.1)});
}

}  // namespace

TEST(CounterRngTest, DependsOnlyOnSeedStreamAndCounter)
{
    const CounterRng a(7, 3);
    const CounterRng b(7, 3);
    const CounterRng c(7, 4);
    const CounterRng d(8, 3);
    std::set<std::uint64_t> seen;
    for (std::uint64_t k = 0; k < 1000; ++k) {
        EXPECT_EQ(a.bits(k), b.bits(k));
        EXPECT_NE(a.bits(k), c.bits(k));
        EXPECT_NE(a.bits(k), d.bits(k));
        seen.insert(a.bits(k));
        const double u = a.uniform(k);
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
    EXPECT_EQ(seen.size(), 1000u);
    // Reading counters out of order changes nothing.
    EXPECT_EQ(a.bits(999), CounterRng(7, 3).bits(999));
}

TEST(LerpIn, EndpointsAreExact)
{
    const Interval iv(0.1, 0.7);
    EXPECT_EQ(lerp_in(iv, 0.0), 0.1);
    EXPECT_EQ(lerp_in(iv, 1.0), 0.7);
    for (double t = 0.0; t <= 1.0; t += 0.01) EXPECT_TRUE(iv.contains(lerp_in(iv, t)));
}

TEST(BoundaryCheck, CertifiedSetsAreClean)
{
    std::mt19937_64 rng(1);
    for (int k = 0; k < 10; ++k) {
        const double rate = it::uniform(rng, 0.5, 3.0);
        const ClosedLoopSystem sys = contracting(rate);
        const IntervalVector box{Interval(-1, 1), Interval(-1, 1)};
        const InvarianceCertificate cert = check_invariance(EmbeddingSystem{std::make_shared<BoxInclusion>(sys, box)}, box);
        ASSERT_EQ(cert.verdict, Verdict::invariant);
        BoundaryOptions opt;
        opt.n_samples = 4000;
        opt.seed = static_cast<std::uint64_t>(k);
        const BoundaryReport r = boundary_check(sys, box, opt);
        EXPECT_TRUE(r.clean());
        EXPECT_EQ(r.n_samples, 4000u);
        ASSERT_EQ(r.facets.size(), 4u);
        for (const FacetMargin& f : r.facets) {
            EXPECT_EQ(f.samples, 1000u);
            EXPECT_GE(f.worst_inward_margin, 0.0);
        }
        // The sound margin never exceeds the true inward speed at a corner.
        EXPECT_LE(r.worst_margin(), rate - 0.1 + 1e-12);
    }
}

TEST(BoundaryCheck, FindsAndReplaysWitnessesOnNonInvariantBoxes)
{
    const ClosedLoopSystem sys = skew2d();
    const IntervalVector box{Interval(-1, 1), Interval(-1, 1)};
    BoundaryOptions opt;
    opt.n_samples = 2000;
    opt.seed = 9;
    const BoundaryReport r = boundary_check(sys, box, opt);
    ASSERT_FALSE(r.clean());
    EXPECT_LE(r.witnesses.size(), opt.max_witnesses);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
    const Paralleletope set = make_paralleletope(I, I, box);
    for (const BoundaryWitness& w : r.witnesses) {
        EXPECT_GT(w.outward.lo(), 0.0);
        EXPECT_EQ(w.x(static_cast<Eigen::Index>(w.axis)), w.side < 0 ? -1.0 : 1.0);
        // Point evaluation agrees with the enclosure.
        const double f = sys.eval(w.x, w.w)(static_cast<Eigen::Index>(w.axis));
        EXPECT_GT(w.side * f, 0.0);
    }
    const std::vector<bool> replay = replay_witnesses(sys, set, r.witnesses);
    for (bool b : replay) EXPECT_TRUE(b);
    // Against a contracting field the same points are not outward.
    for (bool b : replay_witnesses(contracting(1.0), set, r.witnesses)) EXPECT_FALSE(b);
}

TEST(BoundaryCheck, SameSeedSameReport)
{
    const ClosedLoopSystem sys = skew2d();
    const IntervalVector box{Interval(-1, 1), Interval(-1, 1)};
    BoundaryOptions opt;
    opt.n_samples = 1000;
    opt.seed = 4;
    const BoundaryReport a = boundary_check(sys, box, opt);
    const BoundaryReport b = boundary_check(sys, box, opt);
    ASSERT_EQ(a.witnesses.size(), b.witnesses.size());
    for (std::size_t i = 0; i < a.witnesses.size(); ++i) {
        EXPECT_EQ(a.witnesses[i].x, b.witnesses[i].x);
        EXPECT_EQ(a.witnesses[i].w, b.witnesses[i].w);
    }
    EXPECT_EQ(a.worst_margin(), b.worst_margin());
}

TEST(BoundaryCheck, ParalleletopeFacetsLieOnTheBoundary)
{
    const ClosedLoopSystem sys = skew2d();
    const TransformChoice c = choose_transform(sys, Eigen::VectorXd::Zero(2), IntervalVector{Interval(-1, 1), Interval(-1, 1)});
    const IntervalVector ybox{Interval(-1, 1), Interval(-1, 1)};
    const Paralleletope set = make_paralleletope(c.T, c.Tinv, ybox);
    BoundaryOptions opt;
    opt.n_samples = 4000;
    const BoundaryReport r = boundary_check(sys, set, opt);
    EXPECT_TRUE(r.clean());
    EXPECT_GT(r.worst_margin(), 0.0);
}

TEST(GridOracle, PointsAndBudget)
{
    const auto pts = grid_points(Interval(0.1, 0.7), 3);
    ASSERT_EQ(pts.size(), 4u);
    EXPECT_EQ(pts.front(), 0.1);
    EXPECT_EQ(pts.back(), 0.7);
    EXPECT_EQ(grid_points(Interval(2.0), 5).size(), 1u);
    const ClosedLoopSystem sys = skew2d();
    EXPECT_THROW(grid_minimal_inclusion(sys, IntervalVector{Interval(-1, 1), Interval(-1, 1)}, 1000, 1e6),
                 std::length_error);
}

TEST(GridOracle, MinimalInclusionSitsInsideEverySoundInclusion)
{
    std::mt19937_64 rng(2);
    for (int k = 0; k < 20; ++k) {
        const Activation act = k % 2 == 0 ? Activation::relu : Activation::tanh;
        const ClosedLoopSystem sys = it::random_closed_loop(rng, Dims{2, 1, 1}, act);
        const IntervalVector box = it::random_box(rng, 2, 1.0, 0.3);
        const IntervalVector grid = grid_minimal_inclusion(sys, box, 12);
        EXPECT_TRUE(closed_loop_natural_inclusion(sys, box).contains(grid));
        EXPECT_TRUE(closed_loop_jacobian_inclusion(sys, box, box).contains(grid));
    }
}

TEST(GridOracle, FaceSearchFindsTheSkewWitness)
{
    const ClosedLoopSystem sys = skew2d();
    const BoundaryReport r = grid_face_check(sys, IntervalVector{Interval(-1, 1), Interval(-1, 1)}, 20);
    ASSERT_FALSE(r.clean());
    for (const BoundaryWitness& w : r.witnesses) {
        // f1 = -x1 + 5 x2 leaves the face x1 = 1 only for x2 > 0.2.
        if (w.axis == 0 && w.side > 0) EXPECT_GT(w.x(1), 0.2);
    }
    const BoundaryReport clean = grid_face_check(contracting(1.0), IntervalVector{Interval(-1, 1), Interval(-1, 1)}, 20);
    EXPECT_TRUE(clean.clean());
}

TEST(MonteCarlo, TrajectoriesStayInTheCertifiedFamily)
{
    const Pipeline p = build_pipeline(load_run_config(kConfigs / "linear2d.json"));
    const NestedFamily fam = p.family();
    ASSERT_TRUE(is_nested(fam));
    const TrajectoryBundle b = monte_carlo_trajectories(*p.sys, p.set, 30, 2.0, p.cfg.forward.h, 11);
    EXPECT_EQ(b.paths.size(), 30u);
    EXPECT_EQ(b.times.size(), b.paths[0].size());
    EXPECT_EQ(b.times[1], p.cfg.forward.h);
    for (const auto& path : b.paths) EXPECT_TRUE(p.set.contains(path[0]));
    const ContainmentReport r = check_containment(b, fam, p.set.T);
    EXPECT_GT(r.checks, 30u * 100u);
    EXPECT_TRUE(r.clean()) << r.first_violation;
    // Same seed, same paths.
    const TrajectoryBundle again = monte_carlo_trajectories(*p.sys, p.set, 30, 2.0, p.cfg.forward.h, 11);
    EXPECT_EQ(again.paths[7].back(), b.paths[7].back());
}

TEST(MonteCarlo, ContainmentFlagsEscapes)
{
    auto dyn = std::make_shared<const Dynamics>(parse_vector_field({"x1"}, Dims{1, 0, 0}));
    const ClosedLoopSystem sys(dyn, nullptr, IntervalVector());
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(1, 1);
    const Paralleletope set = make_paralleletope(I, I, IntervalVector{Interval(0.5, 1)});
    const TrajectoryBundle b = monte_carlo_trajectories(sys, set, 5, 1.0, 0.1, 1);
    NestedFamily fam;
    for (int k = 0; k <= 10; ++k) {
        FamilyMember m;
        m.t = 0.1 * k;
        m.state = EmbeddingState(IntervalVector{Interval(0.5, 1)});
        fam.members.push_back(m);
    }
    const ContainmentReport r = check_containment(b, fam, I);
    EXPECT_GT(r.violations, 0u);
    EXPECT_FALSE(r.first_violation.empty());
}
