#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "invkit/oracle.hpp"
#include "invkit/paralleletope.hpp"
#include "support/random_models.hpp"

using namespace invkit;
namespace it = invkit::testing;

namespace {

ClosedLoopSystem skew2d()
{
    auto dyn = std::make_shared<const Dynamics>(parse_vector_field({"-x1 + 5*x2", "-2*x2 + w1"}, Dims{2, 0, 1}));
    return ClosedLoopSystem(dyn, nullptr, IntervalVector{Interval(-0.01, 0.01)});
}

Eigen::MatrixXd well_conditioned(std::mt19937_64& rng, Eigen::Index n)
{
    return it::random_matrix(rng, n, n, 0.4) + Eigen::MatrixXd::Identity(n, n);
}

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

}  // namespace

TEST(InverseEnclosure, ContainsTheExactInverse)
{
    std::mt19937_64 rng(1);
    for (int k = 0; k < 100; ++k) {
        const Eigen::MatrixXd Tinv = well_conditioned(rng, 4);
        const Eigen::MatrixXd T = Tinv.inverse();
        const IntervalMatrix Tb = enclose_inverse(T, Tinv);
        EXPECT_TRUE(Tb.contains(T));
        // [T] Tinv encloses the identity, which pins the exact inverse.
        EXPECT_TRUE(matmul(Tb, Tinv).contains(Eigen::MatrixXd::Identity(4, 4)));
        EXPECT_LE((Tb.upper() - Tb.lower()).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_EQ(enclose_inverse(Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(3, 3)),
              IntervalMatrix(Eigen::MatrixXd::Identity(3, 3)));
    EXPECT_THROW(enclose_inverse(Eigen::MatrixXd::Identity(2, 2), 3 * Eigen::MatrixXd::Identity(2, 2)),
                 std::invalid_argument);
}

TEST(ParalleletopeSet, ValidationContainmentAndHull)
{
    Eigen::MatrixXd Tinv(2, 2);
    Tinv << 1, 1, 0, 1;
    const Eigen::MatrixXd T = Tinv.inverse();
    const IntervalVector ybox{Interval(-1, 1), Interval(-1, 1)};
    const Paralleletope p = make_paralleletope(T, Tinv, ybox);
    EXPECT_TRUE(p.contains(Eigen::Vector2d(2, 1) * 0.999));
    EXPECT_FALSE(p.contains(Eigen::Vector2d(2, -1)));
    EXPECT_EQ(p.hull(), (IntervalVector{Interval(-2, 2), Interval(-1, 1)}));
    EXPECT_THROW(make_paralleletope(T, Eigen::MatrixXd::Identity(2, 2), ybox), std::invalid_argument);
    Eigen::MatrixXd singular(2, 2);
    singular << 1, 1, 1, 1;
    EXPECT_THROW(make_paralleletope(singular, singular, ybox), std::invalid_argument);
    EXPECT_THROW(make_paralleletope(T, Tinv, IntervalVector{Interval(0, 1)}), std::invalid_argument);
}

TEST(ParalleletopeSet, ProjectionOfABoxIsItsRectangle)
{
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
    const Paralleletope p = make_paralleletope(I, I, IntervalVector{Interval(0, 2), Interval(-1, 1), Interval(5, 6)});
    const auto v = projection_polygon(p, 0, 1);
    ASSERT_EQ(v.size(), 4u);
    double area = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const auto& a = v[k];
        const auto& b = v[(k + 1) % v.size()];
        area += a.x() * b.y() - a.y() * b.x();
    }
    EXPECT_DOUBLE_EQ(0.5 * area, 4.0);  // positive: counter-clockwise
    EXPECT_THROW(projection_polygon(p, 0, 3), std::out_of_range);
}

TEST(ParalleletopeSet, ProjectionAreaMatchesTheDeterminant)
{
    std::mt19937_64 rng(2);
    for (int k = 0; k < 20; ++k) {
        const Eigen::MatrixXd Tinv = well_conditioned(rng, 2);
        const IntervalVector ybox{Interval(-1, 2), Interval(0, 0.5)};
        const Paralleletope p = make_paralleletope(Tinv.inverse(), Tinv, ybox);
        const auto v = projection_polygon(p, 0, 1);
        double area = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const auto& a = v[i];
            const auto& b = v[(i + 1) % v.size()];
            area += a.x() * b.y() - a.y() * b.x();
        }
        EXPECT_NEAR(0.5 * area, std::abs(Tinv.determinant()) * 3.0 * 0.5, 1e-12);
        // Every vertex is an image of a ybox corner.
        for (const auto& vert : v) {
            const Eigen::Vector2d y = Tinv.inverse() * vert;
            EXPECT_TRUE(std::abs(std::abs(y(0) - 0.5) - 1.5) < 1e-9 && std::abs(std::abs(y(1) - 0.25) - 0.25) < 1e-9);
        }
    }
}

TEST(TransformedSystemTest, EvaluatesInTransformedCoordinates)
{
    std::mt19937_64 rng(3);
    const ClosedLoopSystem sys = it::random_closed_loop(rng, Dims{3, 1, 1}, Activation::tanh);
    const Eigen::MatrixXd Tinv = well_conditioned(rng, 3);
    const TransformedSystem ts(sys, Tinv.inverse(), Tinv);
    EXPECT_TRUE(ts.has_network());
    for (int s = 0; s < 20; ++s) {
        const Eigen::Vector3d y(it::uniform(rng, -1, 1), it::uniform(rng, -1, 1), it::uniform(rng, -1, 1));
        const Eigen::VectorXd w = Eigen::VectorXd::Constant(1, 0.05);
        const Eigen::VectorXd expected = Tinv.inverse() * sys.eval(Tinv * y, w);
        EXPECT_LE((ts.eval(y, w) - expected).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_THROW(TransformedSystem(sys, Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2)),
                 std::invalid_argument);
}

TEST(TransformedInclusionTest, ContainsSampledTransformedVectorField)
{
    std::mt19937_64 rng(4);
    for (int k = 0; k < 30; ++k) {
        const Activation act = k % 2 == 0 ? Activation::relu : Activation::tanh;
        const ClosedLoopSystem sys = it::random_closed_loop(rng, Dims{3, 2, 1}, act);
        const Eigen::MatrixXd Tinv = well_conditioned(rng, 3);
        const TransformedSystem ts(sys, Tinv.inverse(), Tinv);
        const IntervalVector yregion = it::random_box(rng, 3, 0.5, 0.4);
        const IntervalVector yface = sub_box(yregion, rng, 0.5);
        const IntervalVector out = transformed_inclusion(ts, yface, ts.to_x(yregion));
        for (int s = 0; s < 300; ++s) {
            const Eigen::VectorXd y = it::sample_box(yface, rng);
            const Eigen::VectorXd w = it::sample_box(sys.wbox(), rng);
            const IntervalVector fy = matvec(ts.T_enclosure(), sys.enclose(Tinv * y, w));
            for (std::size_t i = 0; i < 3; ++i) {
                ASSERT_LE(out[i].lo(), fy[i].hi()) << "instance " << k;
                ASSERT_GE(out[i].hi(), fy[i].lo()) << "instance " << k;
            }
        }
    }
}

TEST(TransformedInclusionTest, IdentityTransformBitwiseMatchesTheBoxPath)
{
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
    for (int k = 0; k < 30; ++k) {
        const Activation act = k % 2 == 0 ? Activation::relu : Activation::tanh;
        const ClosedLoopSystem sys = it::random_closed_loop(rng, Dims{3, 2, 1}, act);
        const IntervalVector box = it::random_box(rng, 3, 1.0, 0.3);
        for (InclusionMode mode : {InclusionMode::jacobian, InclusionMode::natural}) {
            const auto ts = std::make_shared<const TransformedSystem>(sys, I, I);
            const InvarianceCertificate a = check_paralleletope_invariance(ts, make_paralleletope(I, I, box), mode);
            const InvarianceCertificate b =
                check_invariance(EmbeddingSystem{std::make_shared<BoxInclusion>(sys, box, mode)}, box);
            ASSERT_EQ(a.rhs.size(), b.rhs.size());
            for (Eigen::Index i = 0; i < a.rhs.size(); ++i) {
                EXPECT_EQ(std::bit_cast<std::uint64_t>(a.rhs(i)), std::bit_cast<std::uint64_t>(b.rhs(i)))
                    << "instance " << k << " entry " << i;
            }
            EXPECT_EQ(a.verdict, b.verdict);
        }
    }
}

TEST(TransformedInclusionTest, RejectsFacesOutsideTheLocalization)
{
    const ClosedLoopSystem sys = skew2d();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
    const auto ts = std::make_shared<const TransformedSystem>(sys, I, I);
    const TransformedInclusion incl(ts, IntervalVector{Interval(-1, 1), Interval(-1, 1)});
    EXPECT_THROW(incl.evaluate(IntervalVector{Interval(-2, 1), Interval(-1, 1)}), LocalizationError);
    EXPECT_THROW(check_paralleletope_invariance(
                     ts, make_paralleletope(2 * I, 0.5 * I, IntervalVector{Interval(-1, 1), Interval(-1, 1)})),
                 std::invalid_argument);
}

TEST(SkewSystem, EigenAlignedSetCertifiesWhileTheBoxDoesNot)
{
    const ClosedLoopSystem sys = skew2d();
    const Eigen::VectorXd x_star = Eigen::VectorXd::Zero(2);
    const IntervalVector z{Interval(-20, 20), Interval(-20, 20)};
    const TransformChoice choice = choose_transform(sys, x_star, z);
    EXPECT_EQ(choice.method, "eigen");
    EXPECT_TRUE(choice.stable);
    ASSERT_EQ(choice.eigenvalues.size(), 2u);
    EXPECT_NEAR(choice.eigenvalues[0].real(), -2.0, 1e-12);
    EXPECT_NEAR(choice.eigenvalues[1].real(), -1.0, 1e-12);

    const IntervalVector unit{Interval(-1, 1), Interval(-1, 1)};
    const auto ts = std::make_shared<const TransformedSystem>(sys, choice.T, choice.Tinv);
    const InvarianceCertificate para =
        check_paralleletope_invariance(ts, make_paralleletope(choice.T, choice.Tinv, unit));
    EXPECT_EQ(para.verdict, Verdict::invariant);

    const InvarianceCertificate box = check_invariance(EmbeddingSystem{std::make_shared<BoxInclusion>(sys, unit)}, unit);
    EXPECT_EQ(box.verdict, Verdict::inconclusive);
    const BoundaryReport grid = grid_face_check(sys, unit, 16);
    EXPECT_FALSE(grid.clean());
}

TEST(ChooseTransform, RowsAreUnitAndTheSpectrumIsSorted)
{
    std::mt19937_64 rng(6);
    for (int k = 0; k < 30; ++k) {
        const ClosedLoopSystem sys = it::random_closed_loop(rng, Dims{3, 1, 1}, Activation::tanh);
        const IntervalVector z = it::random_box(rng, 3, 0.0, 1.0);
        const TransformChoice c = choose_transform(sys, Eigen::VectorXd::Zero(3), z);
        EXPECT_LE((c.T * c.Tinv - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-9);
        for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(c.T.row(i).cwiseAbs().maxCoeff(), 1.0, 1e-15);
        for (std::size_t i = 1; i < c.eigenvalues.size(); ++i)
            EXPECT_LE(c.eigenvalues[i - 1].real(), c.eigenvalues[i].real());
        if (c.method == "eigen") {
            // T A T^-1 is block diagonal up to rounding.
            const Eigen::MatrixXd D = c.T * c.A_cl * c.Tinv;
            for (Eigen::Index i = 0; i < 3; ++i)
                for (Eigen::Index j = 0; j < 3; ++j)
                    if (std::abs(i - j) > 1) EXPECT_LE(std::abs(D(i, j)), 1e-8);
        }
    }
}

TEST(ChooseTransform, ComplexPairBecomesARotationBlock)
{
    auto dyn = std::make_shared<const Dynamics>(parse_vector_field({"-x1 + 3*x2", "-3*x1 - x2"}, Dims{2, 0, 0}));
    const ClosedLoopSystem sys(dyn, nullptr, IntervalVector());
    const TransformChoice c = choose_transform(sys, Eigen::VectorXd::Zero(2), IntervalVector{Interval(-1, 1), Interval(-1, 1)});
    EXPECT_NEAR(c.eigenvalues[0].real(), -1.0, 1e-12);
    EXPECT_NEAR(std::abs(c.eigenvalues[0].imag()), 3.0, 1e-12);
    EXPECT_GT(c.eigenvalues[0].imag(), 0.0);
    const Eigen::MatrixXd D = c.T * c.A_cl * c.Tinv;
    EXPECT_NEAR(D(0, 0), -1.0, 1e-12);
    EXPECT_NEAR(D(1, 1), -1.0, 1e-12);
    EXPECT_NEAR(D(0, 1), -D(1, 0), 1e-12);
}

TEST(ChooseTransform, RepeatedEigenvalueKeepsDecoupledAxesDecoupled)
{
    auto dyn = std::make_shared<const Dynamics>(parse_vector_field({"-2*x1", "-2*x2", "-x3 + x1"}, Dims{3, 0, 0}));
    const ClosedLoopSystem sys(dyn, nullptr, IntervalVector());
    const IntervalVector z{Interval(-1, 1), Interval(-1, 1), Interval(-1, 1)};
    const TransformChoice c = choose_transform(sys, Eigen::VectorXd::Zero(3), z);
    EXPECT_EQ(c.method, "eigen");
    const Eigen::MatrixXd D = c.T * c.A_cl * c.Tinv;
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 3; ++j)
            if (i != j) EXPECT_LE(std::abs(D(i, j)), 1e-12);
    EXPECT_EQ(c.Tinv(0, 1), 0.0);
    EXPECT_EQ(c.Tinv(1, 0), 0.0);
}

TEST(ChooseTransform, ColumnScalingNormalizesTheBasis)
{
    const ClosedLoopSystem sys = skew2d();
    const TransformChoice c = choose_transform(sys, Eigen::VectorXd::Zero(2),
                                               IntervalVector{Interval(-1, 1), Interval(-1, 1)},
                                               TransformScaling::unit_columns);
    for (Eigen::Index i = 0; i < 2; ++i) {
        EXPECT_NEAR(c.Tinv.col(i).norm(), 1.0, 1e-15);
        Eigen::Index arg = 0;
        c.Tinv.col(i).cwiseAbs().maxCoeff(&arg);
        EXPECT_GT(c.Tinv(arg, i), 0.0);
    }
    EXPECT_EQ(parse_transform_scaling("columns"), TransformScaling::unit_columns);
    EXPECT_THROW(parse_transform_scaling("diagonal"), std::invalid_argument);
}

TEST(ChooseTransform, PermuteModesReordersRowsColumnsAndEigenvalues)
{
    const ClosedLoopSystem sys = skew2d();
    TransformChoice c = choose_transform(sys, Eigen::VectorXd::Zero(2), IntervalVector{Interval(-1, 1), Interval(-1, 1)});
    const TransformChoice before = c;
    permute_modes(c, {1, 0});
    EXPECT_EQ(c.T.row(0), before.T.row(1));
    EXPECT_EQ(c.Tinv.col(1), before.Tinv.col(0));
    EXPECT_EQ(c.eigenvalues[0], before.eigenvalues[1]);
    EXPECT_LE((c.T * c.Tinv - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_THROW(permute_modes(c, {0, 0}), std::invalid_argument);
    EXPECT_THROW(permute_modes(c, {0}), std::invalid_argument);
}

TEST(Equilibrium, FindsTheRestPointOrReportsDivergence)
{
    auto dyn = std::make_shared<const Dynamics>(parse_vector_field({"-(x1 - 1)", "-2*(x2 + x1)"}, Dims{2, 0, 0}));
    const ClosedLoopSystem sys(dyn, nullptr, IntervalVector());
    const Eigen::VectorXd x = find_equilibrium(sys, Eigen::VectorXd::Zero(2), 100, 1e-12);
    EXPECT_NEAR(x(0), 1.0, 1e-11);
    EXPECT_NEAR(x(1), -1.0, 1e-11);
    auto unstable = std::make_shared<const Dynamics>(parse_vector_field({"x1"}, Dims{1, 0, 0}));
    EXPECT_THROW(find_equilibrium(ClosedLoopSystem(unstable, nullptr, IntervalVector()), Eigen::VectorXd::Ones(1), 5, 1e-10),
                 std::runtime_error);
}
