#include <gtest/gtest.h>

#include <random>

#include "invkit/inclusion.hpp"
#include "support/random_models.hpp"

using namespace invkit;
namespace it = invkit::testing;

namespace {

/// Random sub-box of z.
IntervalVector sub_box(const IntervalVector& z, std::mt19937_64& rng, double fraction)
{
    IntervalVector out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double w = z[i].width() * fraction;
        const double lo = z[i].lo() + it::uniform(rng, 0.0, 1.0) * (z[i].width() - w);
        out[i] = Interval(lo, std::min(lo + w, z[i].hi()));
    }
    return out;
}

ClosedLoopSystem linear_system()
{
    auto dyn = std::make_shared<const Dynamics>(
        parse_vector_field({"-x1 + 0.5*x2", "0.5*x1 + u1 + w1"}, Dims{2, 1, 1}));
    Eigen::MatrixXd K(1, 2);
    K << -0.5, -2.0;
    auto net = std::make_shared<const FeedforwardNetwork>(build_linear_relu_net(K));
    return ClosedLoopSystem(dyn, net, IntervalVector{Interval(-0.1, 0.1)});
}

}  // namespace

TEST(ClosedLoop, ValidatesDimensions)
{
    auto dyn = std::make_shared<const Dynamics>(parse_vector_field({"x2", "u1"}, Dims{2, 1, 0}));
    std::mt19937_64 rng(1);
    auto wrong = std::make_shared<const FeedforwardNetwork>(it::random_network(rng, 3, 1, Activation::relu));
    EXPECT_THROW(ClosedLoopSystem(dyn, wrong, IntervalVector()), std::invalid_argument);
    EXPECT_THROW(ClosedLoopSystem(dyn, nullptr, IntervalVector()), std::invalid_argument);
    EXPECT_THROW(ClosedLoopSystem(dyn, nullptr, IntervalVector{Interval(0)}), std::invalid_argument);
    auto autonomous = std::make_shared<const Dynamics>(parse_vector_field({"-x1"}, Dims{1, 0, 0}));
    auto net = std::make_shared<const FeedforwardNetwork>(it::random_network(rng, 1, 1, Activation::relu));
    EXPECT_THROW(ClosedLoopSystem(autonomous, net, IntervalVector()), std::invalid_argument);
    EXPECT_NO_THROW(ClosedLoopSystem(autonomous, nullptr, IntervalVector()));
}

TEST(ClosedLoop, PointEnclosureContainsFloatingEvaluation)
{
    std::mt19937_64 rng(2);
    const ClosedLoopSystem sys = it::random_closed_loop(rng, Dims{3, 2, 1}, Activation::tanh);
    for (int s = 0; s < 100; ++s) {
        const Eigen::VectorXd x = it::sample_box(it::random_box(rng, 3, 1.0, 1.0), rng);
        const Eigen::VectorXd w = it::sample_box(sys.wbox(), rng);
        EXPECT_TRUE(sys.enclose(x, w).contains(sys.eval(x, w)));
    }
}

TEST(ClosedLoop, NetworkBoundsAreNoWiderThanIbp)
{
    std::mt19937_64 rng(3);
    for (int k = 0; k < 30; ++k) {
        const ClosedLoopSystem sys = it::random_closed_loop(rng, Dims{2, 1, 1}, Activation::relu);
        const IntervalVector box = it::random_box(rng, 2, 1.0, 0.5);
        const IntervalVector nb = sys.network_bounds(box);
        EXPECT_TRUE(interval_forward(sys.network(), box).contains(nb));
        for (int s = 0; s < 100; ++s) ASSERT_TRUE(nb.contains(sys.control(it::sample_box(box, rng))));
    }
}

TEST(InclusionContract, BothFormsContainSampledVectorField)
{
    std::mt19937_64 rng(4);
    for (int k = 0; k < 40; ++k) {
        const Activation act = k % 2 == 0 ? Activation::relu : Activation::tanh;
        const ClosedLoopSystem sys = it::random_closed_loop(rng, Dims{3, 2, 1}, act);
        const IntervalVector z = it::random_box(rng, 3, 1.0, 0.5);
        const IntervalVector face = sub_box(z, rng, 0.6);
        const IntervalVector jac = closed_loop_jacobian_inclusion(sys, z, face);
        const IntervalVector nat = closed_loop_natural_inclusion(sys, face);
        for (int s = 0; s < 500; ++s) {
            const Eigen::VectorXd x = it::sample_box(face, rng);
            const Eigen::VectorXd w = it::sample_box(sys.wbox(), rng);
            const IntervalVector f = sys.enclose(x, w);
            for (std::size_t i = 0; i < f.size(); ++i) {
                ASSERT_LE(jac[i].lo(), f[i].hi()) << "jacobian form, instance " << k;
                ASSERT_GE(jac[i].hi(), f[i].lo()) << "jacobian form, instance " << k;
                ASSERT_LE(nat[i].lo(), f[i].hi()) << "natural form, instance " << k;
                ASSERT_GE(nat[i].hi(), f[i].lo()) << "natural form, instance " << k;
            }
        }
    }
}

TEST(InclusionContract, NaturalFormIsMonotone)
{
    std::mt19937_64 rng(5);
    for (int k = 0; k < 40; ++k) {
        const ClosedLoopSystem sys = it::random_closed_loop(rng, Dims{3, 2, 1}, Activation::tanh);
        const IntervalVector outer = it::random_box(rng, 3, 1.0, 0.5);
        const IntervalVector inner = sub_box(outer, rng, 0.5);
        EXPECT_TRUE(closed_loop_natural_inclusion(sys, outer).contains(closed_loop_natural_inclusion(sys, inner)));
    }
}

TEST(InclusionContract, JacobianFormIsMonotoneWithFixedLocalization)
{
    std::mt19937_64 rng(6);
    for (int k = 0; k < 40; ++k) {
        const ClosedLoopSystem sys = it::random_closed_loop(rng, Dims{3, 2, 1}, Activation::relu);
        const IntervalVector z = it::random_box(rng, 3, 1.0, 0.5);
        const Localization loc = localize(sys, z);
        const AffineRelaxation rel = crown_affine_bounds(sys.network(), z);
        const IntervalVector outer = sub_box(z, rng, 0.7);
        const IntervalVector inner = sub_box(outer, rng, 0.5);
        EXPECT_TRUE(closed_loop_jacobian_inclusion(sys, loc, rel, outer)
                        .contains(closed_loop_jacobian_inclusion(sys, loc, rel, inner)));
    }
}

TEST(InclusionContract, JacobianFormRejectsFacesOutsideTheLocalization)
{
    const ClosedLoopSystem sys = linear_system();
    const IntervalVector z{Interval(-1, 1), Interval(-1, 1)};
    EXPECT_THROW(closed_loop_jacobian_inclusion(sys, z, IntervalVector{Interval(-1, 1.5), Interval(0, 1)}),
                 LocalizationError);
    const BoxInclusion incl(sys, z);
    EXPECT_THROW(incl.evaluate(IntervalVector{Interval(-2, 0), Interval(0, 1)}), LocalizationError);
}

TEST(InclusionContract, LinearClosedLoopIsNearlyExactOnThinFaces)
{
    // f(x) = A x + B K x + w on an active-sign face is affine, so the
    // Jacobian form reproduces it up to rounding plus the disturbance width.
    const ClosedLoopSystem sys = linear_system();
    const IntervalVector z{Interval(-1, -0.5), Interval(-1, -0.5)};
    const IntervalVector face = IntervalVector::thin(Eigen::Vector2d(-0.75, -0.6));
    const IntervalVector f = closed_loop_jacobian_inclusion(sys, z, face);
    EXPECT_LE(f[0].width(), 1e-12);
    EXPECT_LE(f[1].width(), 0.2 + 1e-12);
    const Eigen::VectorXd mid = sys.eval(Eigen::Vector2d(-0.75, -0.6), Eigen::VectorXd::Zero(1));
    EXPECT_TRUE(f.contains(mid));
}

TEST(InclusionContract, JacobianBasedFormContainsSamples)
{
    std::mt19937_64 rng(7);
    for (int k = 0; k < 30; ++k) {
        const Dims d{2, 1, 1};
        const Dynamics dyn(it::random_vector_field(rng, d));
        const IntervalVector box = it::random_box(rng, 4, 1.0, 0.4);
        const Eigen::VectorXd c = it::sample_box(box, rng);
        const IntervalVector out = jacobian_based(dyn, box, c);
        for (int s = 0; s < 200; ++s) {
            const Eigen::VectorXd v = it::sample_box(box, rng);
            const Eigen::VectorXd f = dyn.eval(v.head(2), v.segment(2, 1), v.tail(1));
            ASSERT_TRUE(out.contains(f));
        }
        EXPECT_THROW(jacobian_based(dyn, box, Eigen::VectorXd::Constant(4, 100.0)), std::invalid_argument);
    }
}

TEST(InclusionContract, LocalizationCentersAndClampsTheInput)
{
    std::mt19937_64 rng(8);
    const ClosedLoopSystem sys = it::random_closed_loop(rng, Dims{2, 1, 1}, Activation::relu);
    const IntervalVector z{Interval(-1, 1), Interval(0, 2)};
    const Localization loc = localize(sys, z);
    ASSERT_TRUE(loc.jacobian);
    EXPECT_EQ(loc.x0, z.midpoint());
    EXPECT_TRUE(loc.nz.contains(loc.u0));
    EXPECT_EQ(loc.R.size(), 2u);
}

TEST(BoxInclusionTest, ModesAndRelocalization)
{
    const ClosedLoopSystem sys = linear_system();
    const IntervalVector z{Interval(-1, 1), Interval(-1, 1)};
    const BoxInclusion jac(sys, z);
    const BoxInclusion nat(sys, z, InclusionMode::natural);
    EXPECT_EQ(jac.construction(), "jacobian");
    EXPECT_EQ(nat.construction(), "natural");
    const IntervalVector face{Interval(-1, -1), Interval(-1, 1)};
    EXPECT_EQ(nat.evaluate(face), closed_loop_natural_inclusion(sys, face));
    const auto small = jac.relocalize(IntervalVector{Interval(-1, 0), Interval(-1, 0)});
    EXPECT_EQ(small->region(), (IntervalVector{Interval(-1, 0), Interval(-1, 0)}));
    EXPECT_EQ(small->construction(), "jacobian");
    EXPECT_EQ(parse_inclusion_mode("natural"), InclusionMode::natural);
    EXPECT_THROW(parse_inclusion_mode("milp"), std::invalid_argument);
}

TEST(BoxInclusionTest, AutonomousSystemNeedsNoNetwork)
{
    auto dyn = std::make_shared<const Dynamics>(parse_vector_field({"-x1 + w1"}, Dims{1, 0, 1}));
    const ClosedLoopSystem sys(dyn, nullptr, IntervalVector{Interval(-0.5, 0.5)});
    const BoxInclusion incl(sys, IntervalVector{Interval(-2, 2)});
    const IntervalVector up = incl.evaluate(IntervalVector{Interval(1, 1)});
    EXPECT_TRUE(up.contains(Eigen::VectorXd::Constant(1, -0.5)));
    EXPECT_TRUE(up.contains(Eigen::VectorXd::Constant(1, -1.5)));
    EXPECT_LE(up[0].hi(), -0.5 + 1e-12);
}

TEST(IntersectTest, DisjointAndOverlapping)
{
    const IntervalVector a{Interval(0, 2), Interval(0, 1)};
    const IntervalVector b{Interval(1, 3), Interval(0.5, 4)};
    const auto ab = intersect(a, b);
    ASSERT_TRUE(ab.has_value());
    EXPECT_EQ((*ab)[0], Interval(1, 2));
    EXPECT_EQ((*ab)[1], Interval(0.5, 1));
    EXPECT_FALSE(intersect(a, IntervalVector{Interval(5, 6), Interval(0, 1)}).has_value());
}
