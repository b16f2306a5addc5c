#pragma once

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "invkit/embedding.hpp"
#include "invkit/inclusion.hpp"

namespace invkit {

/// {Tinv y : y in ybox}. Tinv is taken as exact; T is its floating-point
/// inverse and only ever used through an enclosure of the exact inverse.
struct Paralleletope {
    Eigen::MatrixXd T;
    Eigen::MatrixXd Tinv;
    IntervalVector ybox;

    std::size_t dim() const { return ybox.size(); }
    /// Tx in ybox (evaluated in floating point).
    bool contains(const Eigen::VectorXd& x) const;
    /// Interval hull of Tinv * ybox in x-coordinates.
    IntervalVector hull() const;
};

/// Validates shapes and the condition guard.
Paralleletope make_paralleletope(const Eigen::MatrixXd& T, const Eigen::MatrixXd& Tinv, const IntervalVector& ybox);

/// Entry-wise enclosure of the exact inverse of Tinv, centred on T.
IntervalMatrix enclose_inverse(const Eigen::MatrixXd& T, const Eigen::MatrixXd& Tinv);

double condition_number(const Eigen::MatrixXd& m);

/// y' = T f(Tinv y, N'(y), w) with N' = compose_input_transform(N, Tinv).
class TransformedSystem {
public:
    TransformedSystem(ClosedLoopSystem base, Eigen::MatrixXd T, Eigen::MatrixXd Tinv);

    const ClosedLoopSystem& base() const { return base_; }
    const Eigen::MatrixXd& T() const { return T_; }
    const Eigen::MatrixXd& Tinv() const { return Tinv_; }
    const IntervalMatrix& T_enclosure() const { return T_box_; }
    bool has_network() const { return composed_ != nullptr; }
    const FeedforwardNetwork& composed_network() const { return *composed_; }

    Eigen::VectorXd eval(const Eigen::VectorXd& y, const Eigen::VectorXd& w) const;
    /// Hull of Tinv * ybox.
    IntervalVector to_x(const IntervalVector& ybox) const { return matvec(Tinv_, ybox); }

private:
    ClosedLoopSystem base_;
    Eigen::MatrixXd T_;
    Eigen::MatrixXd Tinv_;
    IntervalMatrix T_box_;
    std::shared_ptr<const FeedforwardNetwork> composed_;
};

/// ([T] ([Jx] Tinv + [Ju] C')) yface + [T] [Ju] [d'] + [T] R with the Jacobians and R
/// from a localization in x-coordinates and (C', d') from CROWN on N' over
/// the face.
IntervalVector transformed_inclusion(const TransformedSystem& ts, const Localization& loc,
                                     const AffineRelaxation& rel_prime, const IntervalVector& yface);
IntervalVector transformed_inclusion(const TransformedSystem& ts, const IntervalVector& yface, const IntervalVector& z);

/// The transformed inclusion as a LocalizedInclusion in y-coordinates.
class TransformedInclusion : public LocalizedInclusion {
public:
    TransformedInclusion(std::shared_ptr<const TransformedSystem> ts, const IntervalVector& yregion,
                         InclusionMode mode = InclusionMode::jacobian);

    std::size_t dim() const override { return ts_->base().n(); }
    const IntervalVector& region() const override { return yregion_; }
    IntervalVector evaluate(const IntervalVector& yface) const override;
    std::shared_ptr<const LocalizedInclusion> relocalize(const IntervalVector& yregion) const override;
    std::string construction() const override;
    std::string note() const override { return loc_.note; }
    IntervalVector localization() const override { return loc_.z; }

private:
    std::shared_ptr<const TransformedSystem> ts_;
    IntervalVector yregion_;
    Localization loc_;
    InclusionMode mode_;
};

InvarianceCertificate check_paralleletope_invariance(std::shared_ptr<const TransformedSystem> ts, const Paralleletope& p,
                                                     InclusionMode mode = InclusionMode::jacobian);

struct TransformChoice {
    Eigen::MatrixXd T;
    Eigen::MatrixXd Tinv;
    Eigen::MatrixXd A_cl;
    std::vector<std::complex<double>> eigenvalues;  // ascending real part
    bool stable = false;
    std::string method;  // "eigen" or "schur"
    double condition = 0.0;
    std::string warning;
};

/// unit_rows: each row of T has infinity norm 1. unit_columns: each column of
/// Tinv (an eigenvector or block vector) has 2-norm 1.
enum class TransformScaling { unit_rows, unit_columns };
TransformScaling parse_transform_scaling(std::string_view text);

/// Real block-diagonalizing transform of Jx + Ju C at x*, with C from CROWN
/// over z.
TransformChoice choose_transform(const ClosedLoopSystem& sys, const Eigen::VectorXd& x_star, const IntervalVector& z,
                                 TransformScaling scaling = TransformScaling::unit_rows);

/// Reorders the modes: row k of the new T is row order[k] of the old one.
void permute_modes(TransformChoice& choice, const std::vector<std::size_t>& order);

/// RK4 on x' = f(x, N(x), 0) until the residual drops below tol.
Eigen::VectorXd find_equilibrium(const ClosedLoopSystem& sys, const Eigen::VectorXd& x0, double horizon, double tol,
                                 double h = 0.01);

/// Vertices (counter-clockwise) of the projection onto coordinates (i, j).
std::vector<Eigen::Vector2d> projection_polygon(const Paralleletope& p, std::size_t i, std::size_t j);

}  // namespace invkit
