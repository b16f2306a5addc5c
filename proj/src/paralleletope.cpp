#include "invkit/paralleletope.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace invkit {

namespace {

constexpr double kEigenConditionLimit = 1e8;
constexpr double kRejectCondition = 1e12;

// Upper bound of max_i sum_j |M_ij| over all matrices in the enclosure.
double norm_inf_upper(const IntervalMatrix& m)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double mag = std::max(std::abs(m(i, j).lo()), std::abs(m(i, j).hi()));
            row = rounding::add_up(row, mag);
        }
        worst = std::max(worst, row);
    }
    return worst;
}

}  // namespace

double condition_number(const Eigen::MatrixXd& m)
{
    if (m.size() == 0) return 1.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
    return s(0) / smin;
}

bool Paralleletope::contains(const Eigen::VectorXd& x) const { return ybox.contains(Eigen::VectorXd(T * x)); }

IntervalVector Paralleletope::hull() const { return matvec(Tinv, ybox); }

Paralleletope make_paralleletope(const Eigen::MatrixXd& T, const Eigen::MatrixXd& Tinv, const IntervalVector& ybox)
{
    const auto n = static_cast<Eigen::Index>(ybox.size());
    if (T.rows() != n || T.cols() != n || Tinv.rows() != n || Tinv.cols() != n) {
        throw std::invalid_argument("paralleletope: T, Tinv and ybox dimensions differ");
    }
    const double cond = condition_number(T);
    if (!(cond <= kRejectCondition)) throw std::invalid_argument("paralleletope: T is singular or badly conditioned");
    const double residual = (T * Tinv - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (residual > 1e-10 * cond) throw std::invalid_argument("paralleletope: Tinv is not an inverse of T");
    return {T, Tinv, ybox};
}

IntervalMatrix enclose_inverse(const Eigen::MatrixXd& T, const Eigen::MatrixXd& Tinv)
{
    const std::size_t n = static_cast<std::size_t>(T.rows());
    // E = I - T Tinv; the exact inverse S of Tinv satisfies
    // |S - T| <= |E| |T| / (1 - |E|) in the infinity norm.
    const IntervalMatrix prod = matmul(IntervalMatrix(T), Tinv);
    IntervalMatrix E(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) E(i, j) = Interval(i == j ? 1.0 : 0.0) - prod(i, j);
    const double e = norm_inf_upper(E);
    if (e == 0.0) return IntervalMatrix(T);
    if (!(e < 0.5)) throw std::invalid_argument("enclose_inverse: T is not close enough to the inverse of Tinv");
    const double t = norm_inf_upper(IntervalMatrix(T));
    const double delta = ((Interval(e) * Interval(t)) / (Interval(1.0) - Interval(e))).hi();
    IntervalMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double v = T(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            out(i, j) = Interval(rounding::add_down(v, -delta), rounding::add_up(v, delta));
        }
    }
    return out;
}

TransformedSystem::TransformedSystem(ClosedLoopSystem base, Eigen::MatrixXd T, Eigen::MatrixXd Tinv)
    : base_(std::move(base)), T_(std::move(T)), Tinv_(std::move(Tinv))
{
    const auto n = static_cast<Eigen::Index>(base_.n());
    if (T_.rows() != n || T_.cols() != n || Tinv_.rows() != n || Tinv_.cols() != n) {
        throw std::invalid_argument("transformed system: T and Tinv must be n x n");
    }
    if (!(condition_number(T_) <= kRejectCondition)) {
        throw std::invalid_argument("transformed system: T is singular or badly conditioned");
    }
    T_box_ = enclose_inverse(T_, Tinv_);
    if (base_.has_network()) {
        composed_ = std::make_shared<FeedforwardNetwork>(compose_input_transform(base_.network(), Tinv_));
    }
}

Eigen::VectorXd TransformedSystem::eval(const Eigen::VectorXd& y, const Eigen::VectorXd& w) const
{
    const Eigen::VectorXd x = Tinv_ * y;
    const Eigen::VectorXd u = composed_ ? forward(*composed_, y) : Eigen::VectorXd(0);
    return T_ * base_.dynamics().eval(x, u, w);
}

IntervalVector transformed_inclusion(const TransformedSystem& ts, const Localization& loc,
                                     const AffineRelaxation& rel_prime, const IntervalVector& yface)
{
    if (!loc.jacobian) throw std::logic_error("transformed_inclusion: " + loc.note);
    const IntervalVector xface = ts.to_x(yface);
    if (!loc.z.contains(xface)) {
        std::ostringstream os;
        os << "transformed_inclusion: Tinv * face " << xface << " is not inside localization " << loc.z;
        throw LocalizationError(os.str());
    }
    // Products with [T] are formed on matrices first so T A Tinv keeps its
    // cancellation; each term is mapped separately so T = I is exact.
    const IntervalMatrix& Tb = ts.T_enclosure();
    IntervalMatrix M = matmul(loc.J.jx, ts.Tinv());
    if (ts.base().dims().p == 0) return matvec(matmul(Tb, M), yface) + matvec(Tb, loc.R);
    if (!rel_prime.region.contains(yface)) throw LocalizationError("transformed_inclusion: face outside relaxation region");
    M = M + matmul(loc.J.ju, rel_prime.C);
    const IntervalVector jd = matvec(loc.J.ju, IntervalVector(rel_prime.d_lo, rel_prime.d_hi));
    return matvec(matmul(Tb, M), yface) + matvec(Tb, jd) + matvec(Tb, loc.R);
}

IntervalVector transformed_inclusion(const TransformedSystem& ts, const IntervalVector& yface, const IntervalVector& z)
{
    const Localization loc = localize(ts.base(), z);
    const AffineRelaxation rel =
        ts.has_network() ? crown_affine_bounds(ts.composed_network(), yface) : AffineRelaxation{};
    return transformed_inclusion(ts, loc, rel, yface);
}

TransformedInclusion::TransformedInclusion(std::shared_ptr<const TransformedSystem> ts, const IntervalVector& yregion,
                                           InclusionMode mode)
    : ts_(std::move(ts)), yregion_(yregion), mode_(mode)
{
    if (yregion_.size() != ts_->base().n()) throw std::invalid_argument("TransformedInclusion: dimension mismatch");
    if (mode_ == InclusionMode::jacobian) {
        loc_ = localize(ts_->base(), ts_->to_x(yregion_));
    } else {
        loc_.z = ts_->to_x(yregion_);
    }
}

IntervalVector TransformedInclusion::evaluate(const IntervalVector& yface) const
{
    if (!yregion_.contains(yface)) {
        std::ostringstream os;
        os << "TransformedInclusion: face " << yface << " is not inside localization " << yregion_;
        throw LocalizationError(os.str());
    }
    if (mode_ == InclusionMode::jacobian && loc_.jacobian) {
        const AffineRelaxation rel =
            ts_->has_network() ? crown_affine_bounds(ts_->composed_network(), yface) : AffineRelaxation{};
        return transformed_inclusion(*ts_, loc_, rel, yface);
    }
    const IntervalVector ub = ts_->has_network() ? interval_forward(ts_->composed_network(), yface) : IntervalVector();
    const IntervalVector fx = ts_->base().dynamics().eval(ts_->to_x(yface), ub, ts_->base().wbox());
    return matvec(ts_->T_enclosure(), fx);
}

std::shared_ptr<const LocalizedInclusion> TransformedInclusion::relocalize(const IntervalVector& yregion) const
{
    return std::make_shared<TransformedInclusion>(ts_, yregion, mode_);
}

std::string TransformedInclusion::construction() const
{
    return mode_ == InclusionMode::jacobian && loc_.jacobian ? "jacobian" : "natural";
}

InvarianceCertificate check_paralleletope_invariance(std::shared_ptr<const TransformedSystem> ts, const Paralleletope& p,
                                                     InclusionMode mode)
{
    if ((p.Tinv - ts->Tinv()).cwiseAbs().maxCoeff() != 0.0 || (p.T - ts->T()).cwiseAbs().maxCoeff() != 0.0) {
        throw std::invalid_argument("check_paralleletope_invariance: paralleletope and system use different transforms");
    }
    const EmbeddingSystem es{std::make_shared<TransformedInclusion>(std::move(ts), p.ybox, mode)};
    return check_invariance(es, p.ybox);
}

TransformChoice choose_transform(const ClosedLoopSystem& sys, const Eigen::VectorXd& x_star, const IntervalVector& z,
                                 TransformScaling scaling)
{
    const Dims& d = sys.dims();
    const auto n = static_cast<Eigen::Index>(d.n);
    if (x_star.size() != n || z.size() != d.n) throw std::invalid_argument("choose_transform: dimension mismatch");
    Eigen::MatrixXd jx, ju, jw;
    sys.dynamics().jacobians(x_star, sys.control(x_star), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.q)), jx, ju,
                             jw);
    TransformChoice out;
    out.A_cl = jx;
    if (sys.has_network()) out.A_cl += ju * crown_affine_bounds(sys.network(), z).C;

    Eigen::EigenSolver<Eigen::MatrixXd> solver(out.A_cl);
    if (solver.info() != Eigen::Success) throw std::runtime_error("choose_transform: eigen decomposition failed");
    const Eigen::VectorXcd lambda = solver.eigenvalues();
    const Eigen::MatrixXcd vectors = solver.eigenvectors();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (lambda(a).real() != lambda(b).real()) return lambda(a).real() < lambda(b).real();
        return lambda(a).imag() > lambda(b).imag();
    });
    const double scale = std::max(1.0, out.A_cl.cwiseAbs().maxCoeff());
    const double imag_tol = 1e-12 * scale;
    Eigen::MatrixXd V(n, n);
    Eigen::Index col = 0;
    std::vector<std::pair<Eigen::Index, double>> real_cols;
    for (Eigen::Index k : order) {
        out.eigenvalues.push_back(lambda(k));
        if (std::abs(lambda(k).imag()) <= imag_tol) {
            real_cols.emplace_back(col, lambda(k).real());
            V.col(col++) = vectors.col(k).real();
        } else if (lambda(k).imag() > 0.0 && col + 1 < n) {
            // a + ib spans a real 2x2 block [[s, w], [-w, s]].
            V.col(col++) = vectors.col(k).real();
            V.col(col++) = vectors.col(k).imag();
        }
    }
    // A repeated real eigenvalue has no preferred basis; use the one whose
    // pivot rows form the identity so decoupled axes stay decoupled.
    for (std::size_t a = 0; a < real_cols.size();) {
        std::size_t b = a + 1;
        while (b < real_cols.size() && std::abs(real_cols[b].second - real_cols[a].second) <= 1e-8 * scale) ++b;
        const auto k = static_cast<Eigen::Index>(b - a);
        if (k > 1 && col == n && real_cols[b - 1].first - real_cols[a].first + 1 == k) {
            const Eigen::Index c0 = real_cols[a].first;
            const Eigen::MatrixXd block = V.middleCols(c0, k);
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(block.transpose());
            const auto perm = qr.colsPermutation().indices();
            std::vector<Eigen::Index> rows(perm.data(), perm.data() + k);
            std::sort(rows.begin(), rows.end());
            Eigen::MatrixXd pivots(k, k);
            for (Eigen::Index r = 0; r < k; ++r) pivots.row(r) = block.row(rows[static_cast<std::size_t>(r)]);
            if (qr.rank() == k) V.middleCols(c0, k) = block * pivots.inverse();
        }
        a = b;
    }
    out.stable = std::all_of(out.eigenvalues.begin(), out.eigenvalues.end(),
                             [](const std::complex<double>& l) { return l.real() < 0.0; });

    out.method = "eigen";
    if (col != n || !V.allFinite() || !(condition_number(V) <= kEigenConditionLimit)) {
        Eigen::RealSchur<Eigen::MatrixXd> schur(out.A_cl);
        V = schur.matrixU();
        out.method = "schur";
        out.warning = "eigenvector matrix is (near) defective; using a real Schur basis instead";
    }
    if (scaling == TransformScaling::unit_columns) {
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index arg = 0;
            V.col(i).cwiseAbs().maxCoeff(&arg);
            V.col(i) *= std::copysign(1.0, V(arg, i)) / V.col(i).norm();
        }
    }
    Eigen::MatrixXd T = V.fullPivLu().inverse();
    Eigen::MatrixXd Tinv = V;
    if (scaling == TransformScaling::unit_rows) {
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index arg = 0;
            T.row(i).cwiseAbs().maxCoeff(&arg);
            const double s = T(i, arg);
            T.row(i) /= s;
            Tinv.col(i) *= s;
        }
    }
    out.condition = condition_number(T);
    if (!(out.condition <= kRejectCondition)) throw std::runtime_error("choose_transform: transform is singular");
    out.T = std::move(T);
    out.Tinv = std::move(Tinv);
    return out;
}

void permute_modes(TransformChoice& choice, const std::vector<std::size_t>& order)
{
    const auto n = static_cast<std::size_t>(choice.T.rows());
    std::vector<std::size_t> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        if (sorted[k] != k) throw std::invalid_argument("permute_modes: order is not a permutation of 0..n-1");
    }
    if (order.size() != n) throw std::invalid_argument("permute_modes: order has the wrong length");
    Eigen::MatrixXd T(choice.T.rows(), choice.T.cols());
    Eigen::MatrixXd Tinv(choice.Tinv.rows(), choice.Tinv.cols());
    std::vector<std::complex<double>> eig(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto src = static_cast<Eigen::Index>(order[k]);
        T.row(static_cast<Eigen::Index>(k)) = choice.T.row(src);
        Tinv.col(static_cast<Eigen::Index>(k)) = choice.Tinv.col(src);
        eig[k] = choice.eigenvalues[order[k]];
    }
    choice.T = std::move(T);
    choice.Tinv = std::move(Tinv);
    choice.eigenvalues = std::move(eig);
}

Eigen::VectorXd find_equilibrium(const ClosedLoopSystem& sys, const Eigen::VectorXd& x0, double horizon, double tol, double h)
{
    if (static_cast<std::size_t>(x0.size()) != sys.n()) throw std::invalid_argument("find_equilibrium: dimension mismatch");
    const Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.dims().q));
    const auto f = [&](const Eigen::VectorXd& x) { return sys.eval(x, w); };
    Eigen::VectorXd x = x0;
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / h));
    double residual = f(x).lpNorm<Eigen::Infinity>();
    for (std::size_t k = 0; k < steps && !(residual < tol); ++k) {
        const Eigen::VectorXd k1 = f(x);
        const Eigen::VectorXd k2 = f(x + 0.5 * h * k1);
        const Eigen::VectorXd k3 = f(x + 0.5 * h * k2);
        const Eigen::VectorXd k4 = f(x + h * k3);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite()) throw std::runtime_error("find_equilibrium: trajectory diverged");
        residual = f(x).lpNorm<Eigen::Infinity>();
    }
    if (!(residual < tol)) {
        throw std::runtime_error("find_equilibrium: no convergence within horizon, residual " + format_double(residual));
    }
    return x;
}

std::vector<Eigen::Vector2d> projection_polygon(const Paralleletope& p, std::size_t i, std::size_t j)
{
    const auto n = static_cast<Eigen::Index>(p.dim());
    if (i >= p.dim() || j >= p.dim()) throw std::out_of_range("projection_polygon: coordinate out of range");
    const Eigen::VectorXd mid = p.ybox.midpoint();
    const Eigen::VectorXd rad = 0.5 * p.ybox.width();
    const Eigen::VectorXd c = p.Tinv * mid;
    const Eigen::Vector2d center(c(static_cast<Eigen::Index>(i)), c(static_cast<Eigen::Index>(j)));
    std::vector<Eigen::Vector2d> gens;
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::Vector2d g(p.Tinv(static_cast<Eigen::Index>(i), k) * rad(k), p.Tinv(static_cast<Eigen::Index>(j), k) * rad(k));
        if (g.squaredNorm() == 0.0) continue;
        if (g.y() < 0.0 || (g.y() == 0.0 && g.x() < 0.0)) g = -g;
        gens.push_back(g);
    }
    if (gens.empty()) return {center};
    std::stable_sort(gens.begin(), gens.end(),
                     [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return std::atan2(a.y(), a.x()) < std::atan2(b.y(), b.x()); });
    Eigen::Vector2d v = center;
    for (const auto& g : gens) v -= g;
    // Start at the lowest vertex; walk the sorted generators forward then back.
    std::vector<Eigen::Vector2d> verts;
    for (const auto& g : gens) {
        verts.push_back(v);
        v += 2.0 * g;
    }
    for (const auto& g : gens) {
        verts.push_back(v);
        v -= 2.0 * g;
    }
    return verts;
}

TransformScaling parse_transform_scaling(std::string_view text)
{
    if (text == "rows") return TransformScaling::unit_rows;
    if (text == "columns") return TransformScaling::unit_columns;
    throw std::invalid_argument("unknown transform scaling '" + std::string(text) + "' (expected rows|columns)");
}

}  // namespace invkit
