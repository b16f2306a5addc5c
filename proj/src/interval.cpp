#include "invkit/interval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace invkit {

namespace {

std::atomic<RoundingMode> g_rounding{RoundingMode::sound};

constexpr double kInf = std::numeric_limits<double>::infinity();
// Below this magnitude an fma residual may underflow and stop being exact.
constexpr double kTiny = 0x1p-960;

bool sound() { return g_rounding.load(std::memory_order_relaxed) == RoundingMode::sound; }

std::string describe(const Interval& a)
{
    std::ostringstream os;
    os.precision(17);
    os << '[' << a.lo() << ", " << a.hi() << ']';
    return os.str();
}

[[noreturn]] void domain_fail(std::string_view fn, const Interval& a, std::string_view domain)
{
    throw DomainError(std::string(fn) + ": interval " + describe(a) + " outside domain " + std::string(domain));
}

Interval checked(double lo, double hi, std::string_view what)
{
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
        throw std::overflow_error(std::string(what) + ": result is not finite");
    }
    return {lo, hi};
}

// Library transcendental results are within one ulp; two ulp of widening
// covers them. Exact special values are left alone by the callers.
constexpr int kLibmUlps = 2;

double widen_down(double x) { return sound() ? rounding::next_down(x, kLibmUlps) : x; }
double widen_up(double x) { return sound() ? rounding::next_up(x, kLibmUlps) : x; }

double div_down(double a, double b)
{
    const double q = a / b;
    if (!sound() || !std::isfinite(q)) return q;
    if (std::abs(q) < kTiny) return q == 0.0 && a != 0.0 ? -std::numeric_limits<double>::denorm_min() : rounding::next_down(q);
    const double r = std::fma(-q, b, a);  // a - q*b exactly
    return (r < 0.0) != (b < 0.0) && r != 0.0 ? rounding::next_down(q) : q;
}

double div_up(double a, double b)
{
    const double q = a / b;
    if (!sound() || !std::isfinite(q)) return q;
    if (std::abs(q) < kTiny) return q == 0.0 && a != 0.0 ? std::numeric_limits<double>::denorm_min() : rounding::next_up(q);
    const double r = std::fma(-q, b, a);
    return (r > 0.0) != (b < 0.0) && r != 0.0 ? rounding::next_up(q) : q;
}

double sqrt_down(double x)
{
    const double r = std::sqrt(x);
    if (!sound() || r == 0.0) return r;
    return std::fma(-r, r, x) < 0.0 ? rounding::next_down(r) : r;
}

double sqrt_up(double x)
{
    const double r = std::sqrt(x);
    if (!sound() || r == 0.0) return r;
    return std::fma(-r, r, x) > 0.0 ? rounding::next_up(r) : r;
}

// Bounds on x^k for x >= 0 by binary exponentiation with directed rounding.
double pow_nonneg_down(double x, unsigned k)
{
    double result = 1.0;
    double base = x;
    while (k > 0) {
        if (k & 1u) result = rounding::mul_down(result, base);
        k >>= 1u;
        if (k > 0) base = rounding::mul_down(base, base);
    }
    return std::max(result, 0.0);
}

double pow_nonneg_up(double x, unsigned k)
{
    double result = 1.0;
    double base = x;
    while (k > 0) {
        if (k & 1u) result = rounding::mul_up(result, base);
        k >>= 1u;
        if (k > 0) base = rounding::mul_up(base, base);
    }
    return result;
}

// Whether some phase + 2*pi*k lies in [lo, hi]; errs towards true.
bool hits_phase(double lo, double hi, double phase)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double slack = 1e-12 + 1e-15 * std::max(std::abs(lo), std::abs(hi));
    const double k_min = std::ceil((lo - phase) / two_pi - slack);
    const double k_max = std::floor((hi - phase) / two_pi + slack);
    return k_min <= k_max;
}

Interval periodic(const Interval& a, double (*fn)(double), double max_phase, double min_phase, std::string_view name)
{
    if (a.width() >= 2.0 * std::numbers::pi || std::max(std::abs(a.lo()), std::abs(a.hi())) > 1e9) {
        return {-1.0, 1.0};
    }
    const double f_lo = fn(a.lo());
    const double f_hi = fn(a.hi());
    const bool exact_lo = a.lo() == 0.0;
    const bool exact_hi = a.hi() == 0.0;
    double lo = std::min(exact_lo ? f_lo : widen_down(f_lo), exact_hi ? f_hi : widen_down(f_hi));
    double hi = std::max(exact_lo ? f_lo : widen_up(f_lo), exact_hi ? f_hi : widen_up(f_hi));
    if (hits_phase(a.lo(), a.hi(), max_phase)) hi = 1.0;
    if (hits_phase(a.lo(), a.hi(), min_phase)) lo = -1.0;
    return checked(std::max(lo, -1.0), std::min(hi, 1.0), name);
}

template <typename F>
Interval monotone_increasing(const Interval& a, F fn, std::string_view name)
{
    return checked(widen_down(fn(a.lo())), widen_up(fn(a.hi())), name);
}

}  // namespace

void set_rounding_mode(RoundingMode mode) { g_rounding.store(mode, std::memory_order_relaxed); }

RoundingMode rounding_mode() { return g_rounding.load(std::memory_order_relaxed); }

RoundingMode parse_rounding_mode(std::string_view text)
{
    if (text == "sound") return RoundingMode::sound;
    if (text == "fast") return RoundingMode::fast;
    throw std::invalid_argument("unknown rounding mode '" + std::string(text) + "' (expected sound|fast)");
}

namespace rounding {

double next_down(double x, int ulps)
{
    for (int i = 0; i < ulps; ++i) x = std::nextafter(x, -kInf);
    return x;
}

double next_up(double x, int ulps)
{
    for (int i = 0; i < ulps; ++i) x = std::nextafter(x, kInf);
    return x;
}

double add_down(double a, double b)
{
    const double s = a + b;
    if (!sound() || !std::isfinite(s)) return s;
    const double bb = s - a;
    const double err = (a - (s - bb)) + (b - bb);
    return err < 0.0 ? next_down(s) : s;
}

double add_up(double a, double b)
{
    const double s = a + b;
    if (!sound() || !std::isfinite(s)) return s;
    const double bb = s - a;
    const double err = (a - (s - bb)) + (b - bb);
    return err > 0.0 ? next_up(s) : s;
}

double mul_down(double a, double b)
{
    const double p = a * b;
    if (!sound() || !std::isfinite(p)) return p;
    if (std::abs(p) < kTiny) {
        if (a == 0.0 || b == 0.0) return p;
        return p == 0.0 ? -std::numeric_limits<double>::denorm_min() : next_down(p);
    }
    return std::fma(a, b, -p) < 0.0 ? next_down(p) : p;
}

double mul_up(double a, double b)
{
    const double p = a * b;
    if (!sound() || !std::isfinite(p)) return p;
    if (std::abs(p) < kTiny) {
        if (a == 0.0 || b == 0.0) return p;
        return p == 0.0 ? std::numeric_limits<double>::denorm_min() : next_up(p);
    }
    return std::fma(a, b, -p) > 0.0 ? next_up(p) : p;
}

}  // namespace rounding

Interval::Interval(double value) : Interval(value, value) {}

Interval::Interval(double lo, double hi) : lo_(lo), hi_(hi)
{
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
        throw std::invalid_argument("Interval: endpoints must be finite");
    }
    if (lo > hi) {
        std::ostringstream os;
        os.precision(17);
        os << "Interval: lower endpoint " << lo << " exceeds upper endpoint " << hi;
        throw std::invalid_argument(os.str());
    }
}

double Interval::midpoint() const
{
    if (lo_ == hi_) return lo_;
    const double m = 0.5 * lo_ + 0.5 * hi_;
    return std::clamp(m, lo_, hi_);
}

Interval operator+(const Interval& a, const Interval& b)
{
    return checked(rounding::add_down(a.lo(), b.lo()), rounding::add_up(a.hi(), b.hi()), "add");
}

Interval operator-(const Interval& a) { return {-a.hi(), -a.lo()}; }

Interval operator-(const Interval& a, const Interval& b)
{
    return checked(rounding::add_down(a.lo(), -b.hi()), rounding::add_up(a.hi(), -b.lo()), "sub");
}

Interval operator*(const Interval& a, const Interval& b)
{
    if (a.is_thin()) return a.lo() * b;
    if (b.is_thin()) return b.lo() * a;
    const double lo = std::min({rounding::mul_down(a.lo(), b.lo()), rounding::mul_down(a.lo(), b.hi()),
                                rounding::mul_down(a.hi(), b.lo()), rounding::mul_down(a.hi(), b.hi())});
    const double hi = std::max({rounding::mul_up(a.lo(), b.lo()), rounding::mul_up(a.lo(), b.hi()),
                                rounding::mul_up(a.hi(), b.lo()), rounding::mul_up(a.hi(), b.hi())});
    return checked(lo, hi, "mul");
}

Interval operator*(double a, const Interval& b)
{
    if (a >= 0.0) return checked(rounding::mul_down(a, b.lo()), rounding::mul_up(a, b.hi()), "mul");
    return checked(rounding::mul_down(a, b.hi()), rounding::mul_up(a, b.lo()), "mul");
}

Interval operator/(const Interval& a, const Interval& b)
{
    if (b.contains_zero()) domain_fail("div", b, "excluding 0 (divisor)");
    const double lo = std::min({div_down(a.lo(), b.lo()), div_down(a.lo(), b.hi()), div_down(a.hi(), b.lo()),
                                div_down(a.hi(), b.hi())});
    const double hi = std::max(
        {div_up(a.lo(), b.lo()), div_up(a.lo(), b.hi()), div_up(a.hi(), b.lo()), div_up(a.hi(), b.hi())});
    return checked(lo, hi, "div");
}

Interval hull(const Interval& a, const Interval& b)
{
    return {std::min(a.lo(), b.lo()), std::max(a.hi(), b.hi())};
}

std::ostream& operator<<(std::ostream& os, const Interval& a) { return os << describe(a); }

std::string_view to_string(ElementaryFunction fn)
{
    switch (fn) {
    case ElementaryFunction::tanh: return "tanh";
    case ElementaryFunction::exp: return "exp";
    case ElementaryFunction::sin: return "sin";
    case ElementaryFunction::cos: return "cos";
    case ElementaryFunction::sqrt: return "sqrt";
    case ElementaryFunction::pow_int: return "pow_int";
    case ElementaryFunction::reciprocal: return "reciprocal";
    case ElementaryFunction::abs: return "abs";
    case ElementaryFunction::relu: return "relu";
    case ElementaryFunction::log: return "log";
    case ElementaryFunction::atanh: return "atanh";
    case ElementaryFunction::sigmoid: return "sigmoid";
    }
    return "?";
}

Interval tanh(const Interval& a)
{
    const auto at = [](double x, bool down) {
        if (x == 0.0) return 0.0;
        const double y = std::tanh(x);
        return down ? widen_down(y) : widen_up(y);
    };
    return checked(std::max(at(a.lo(), true), -1.0), std::min(at(a.hi(), false), 1.0), "tanh");
}

Interval exp(const Interval& a)
{
    const auto at = [](double x, bool down) {
        if (x == 0.0) return 1.0;
        const double y = std::exp(x);
        return down ? widen_down(y) : widen_up(y);
    };
    return checked(std::max(at(a.lo(), true), 0.0), at(a.hi(), false), "exp");
}

Interval log(const Interval& a)
{
    if (a.lo() <= 0.0) domain_fail("log", a, "(0, inf)");
    const auto at = [](double x, bool down) {
        if (x == 1.0) return 0.0;
        const double y = std::log(x);
        return down ? widen_down(y) : widen_up(y);
    };
    return checked(at(a.lo(), true), at(a.hi(), false), "log");
}

Interval sin(const Interval& a)
{
    constexpr double half_pi = 0.5 * std::numbers::pi;
    return periodic(a, static_cast<double (*)(double)>(std::sin), half_pi, -half_pi, "sin");
}

Interval cos(const Interval& a)
{
    const auto fn = [](double x) { return x == 0.0 ? 1.0 : std::cos(x); };
    // Exactness at 0 is handled by cos(0) == 1 being the global max.
    return periodic(a, static_cast<double (*)(double)>(fn), 0.0, std::numbers::pi, "cos");
}

Interval sqrt(const Interval& a)
{
    if (a.lo() < 0.0) domain_fail("sqrt", a, "[0, inf)");
    return checked(sqrt_down(a.lo()), sqrt_up(a.hi()), "sqrt");
}

Interval pow_int(const Interval& a, int exponent)
{
    if (exponent == 0) return Interval(1.0);
    if (exponent == 1) return a;
    if (exponent < 0) {
        if (a.contains_zero()) domain_fail("pow_int", a, "excluding 0 (negative exponent)");
        return reciprocal(pow_int(a, -exponent));
    }
    const auto k = static_cast<unsigned>(exponent);
    const double lo = a.lo();
    const double hi = a.hi();
    if (k % 2 == 1) {
        const double l = lo >= 0.0 ? pow_nonneg_down(lo, k) : -pow_nonneg_up(-lo, k);
        const double h = hi >= 0.0 ? pow_nonneg_up(hi, k) : -pow_nonneg_down(-hi, k);
        return checked(l, h, "pow_int");
    }
    if (lo >= 0.0) return checked(pow_nonneg_down(lo, k), pow_nonneg_up(hi, k), "pow_int");
    if (hi <= 0.0) return checked(pow_nonneg_down(-hi, k), pow_nonneg_up(-lo, k), "pow_int");
    // Interior zero: the minimum is attained at 0.
    return checked(0.0, std::max(pow_nonneg_up(-lo, k), pow_nonneg_up(hi, k)), "pow_int");
}

Interval reciprocal(const Interval& a)
{
    if (a.contains_zero()) domain_fail("reciprocal", a, "excluding 0");
    return checked(div_down(1.0, a.hi()), div_up(1.0, a.lo()), "reciprocal");
}

Interval abs(const Interval& a)
{
    if (a.lo() >= 0.0) return a;
    if (a.hi() <= 0.0) return -a;
    return {0.0, std::max(-a.lo(), a.hi())};
}

Interval relu(const Interval& a) { return {std::max(a.lo(), 0.0), std::max(a.hi(), 0.0)}; }

Interval atanh(const Interval& a)
{
    if (a.lo() <= -1.0 || a.hi() >= 1.0) domain_fail("atanh", a, "(-1, 1)");
    const auto at = [](double x, bool down) {
        if (x == 0.0) return 0.0;
        const double y = std::atanh(x);
        return down ? widen_down(y) : widen_up(y);
    };
    return checked(at(a.lo(), true), at(a.hi(), false), "atanh");
}

Interval sigmoid(const Interval& a)
{
    // exp, add and divide each contribute rounding error; four ulp covers them.
    const auto at = [](double x, bool down) {
        const double y = 1.0 / (1.0 + std::exp(-x));
        if (!sound()) return y;
        return down ? rounding::next_down(y, 4) : rounding::next_up(y, 4);
    };
    return checked(std::max(at(a.lo(), true), 0.0), std::min(at(a.hi(), false), 1.0), "sigmoid");
}

Interval sign(const Interval& a)
{
    if (a.contains_zero()) domain_fail("sign", a, "excluding 0");
    return Interval(a.lo() > 0.0 ? 1.0 : -1.0);
}

Interval elem_minimal(ElementaryFunction fn, const Interval& a, int exponent)
{
    switch (fn) {
    case ElementaryFunction::tanh: return tanh(a);
    case ElementaryFunction::exp: return exp(a);
    case ElementaryFunction::sin: return sin(a);
    case ElementaryFunction::cos: return cos(a);
    case ElementaryFunction::sqrt: return sqrt(a);
    case ElementaryFunction::pow_int: return pow_int(a, exponent);
    case ElementaryFunction::reciprocal: return reciprocal(a);
    case ElementaryFunction::abs: return abs(a);
    case ElementaryFunction::relu: return relu(a);
    case ElementaryFunction::log: return log(a);
    case ElementaryFunction::atanh: return atanh(a);
    case ElementaryFunction::sigmoid: return sigmoid(a);
    }
    throw std::invalid_argument("elem_minimal: unknown function");
}

// ---------------------------------------------------------------------------
// IntervalVector

IntervalVector::IntervalVector(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper)
{
    if (lower.size() != upper.size()) throw std::invalid_argument("IntervalVector: corner dimensions differ");
    elems_.reserve(static_cast<std::size_t>(lower.size()));
    for (Eigen::Index i = 0; i < lower.size(); ++i) elems_.emplace_back(lower(i), upper(i));
}

IntervalVector IntervalVector::thin(const Eigen::VectorXd& point) { return {point, point}; }

IntervalVector IntervalVector::around(const Eigen::VectorXd& center, const Eigen::VectorXd& radius)
{
    if (center.size() != radius.size()) throw std::invalid_argument("IntervalVector::around: dimension mismatch");
    IntervalVector out(static_cast<std::size_t>(center.size()));
    for (Eigen::Index i = 0; i < center.size(); ++i) {
        if (radius(i) < 0.0) throw std::invalid_argument("IntervalVector::around: negative radius");
        out[static_cast<std::size_t>(i)] = checked(rounding::add_down(center(i), -radius(i)),
                                                   rounding::add_up(center(i), radius(i)), "around");
    }
    return out;
}

Eigen::VectorXd IntervalVector::lower() const
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) v(static_cast<Eigen::Index>(i)) = elems_[i].lo();
    return v;
}

Eigen::VectorXd IntervalVector::upper() const
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) v(static_cast<Eigen::Index>(i)) = elems_[i].hi();
    return v;
}

Eigen::VectorXd IntervalVector::width() const { return upper() - lower(); }

Eigen::VectorXd IntervalVector::midpoint() const
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) v(static_cast<Eigen::Index>(i)) = elems_[i].midpoint();
    return v;
}

double IntervalVector::max_width() const
{
    double w = 0.0;
    for (const auto& e : elems_) w = std::max(w, e.width());
    return w;
}

bool IntervalVector::contains(const Eigen::VectorXd& point) const
{
    if (static_cast<std::size_t>(point.size()) != size()) throw std::invalid_argument("IntervalVector::contains: dimension mismatch");
    for (std::size_t i = 0; i < size(); ++i) {
        if (!elems_[i].contains(point(static_cast<Eigen::Index>(i)))) return false;
    }
    return true;
}

bool IntervalVector::contains(const IntervalVector& inner) const
{
    if (inner.size() != size()) throw std::invalid_argument("IntervalVector::contains: dimension mismatch");
    for (std::size_t i = 0; i < size(); ++i) {
        if (!elems_[i].contains(inner[i])) return false;
    }
    return true;
}

IntervalVector hull(const IntervalVector& a, const IntervalVector& b)
{
    if (a.size() != b.size()) throw std::invalid_argument("hull: dimension mismatch");
    IntervalVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = hull(a[i], b[i]);
    return out;
}

IntervalVector operator+(const IntervalVector& a, const IntervalVector& b)
{
    if (a.size() != b.size()) throw std::invalid_argument("IntervalVector +: dimension mismatch");
    IntervalVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

IntervalVector operator-(const IntervalVector& a, const IntervalVector& b)
{
    if (a.size() != b.size()) throw std::invalid_argument("IntervalVector -: dimension mismatch");
    IntervalVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

std::ostream& operator<<(std::ostream& os, const IntervalVector& v)
{
    os << '(';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    return os << ')';
}

// ---------------------------------------------------------------------------
// IntervalMatrix

IntervalMatrix::IntervalMatrix(const Eigen::MatrixXd& thin) : IntervalMatrix(thin, thin) {}

IntervalMatrix::IntervalMatrix(const Eigen::MatrixXd& lower, const Eigen::MatrixXd& upper)
    : rows_(static_cast<std::size_t>(lower.rows())), cols_(static_cast<std::size_t>(lower.cols()))
{
    if (lower.rows() != upper.rows() || lower.cols() != upper.cols()) {
        throw std::invalid_argument("IntervalMatrix: corner shapes differ");
    }
    entries_.reserve(rows_ * cols_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) {
            const auto r = static_cast<Eigen::Index>(i);
            const auto c = static_cast<Eigen::Index>(j);
            entries_.emplace_back(lower(r, c), upper(r, c));
        }
    }
}

IntervalMatrix IntervalMatrix::identity(std::size_t n)
{
    return IntervalMatrix(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
}

Eigen::MatrixXd IntervalMatrix::lower() const
{
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(i, j).lo();
    return m;
}

Eigen::MatrixXd IntervalMatrix::upper() const
{
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(i, j).hi();
    return m;
}

Eigen::MatrixXd IntervalMatrix::midpoint() const
{
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(i, j).midpoint();
    return m;
}

bool IntervalMatrix::contains(const Eigen::MatrixXd& m) const
{
    if (static_cast<std::size_t>(m.rows()) != rows_ || static_cast<std::size_t>(m.cols()) != cols_) return false;
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j)
            if (!(*this)(i, j).contains(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))) return false;
    return true;
}

IntervalMatrix matmul(const IntervalMatrix& a, const IntervalMatrix& b)
{
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
    IntervalMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            if (a.cols() == 0) continue;
            Interval acc = a(i, 0) * b(0, j);
            for (std::size_t k = 1; k < a.cols(); ++k) acc = acc + a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    }
    return out;
}

IntervalMatrix matmul(const IntervalMatrix& a, const Eigen::MatrixXd& b)
{
    if (a.cols() != static_cast<std::size_t>(b.rows())) throw std::invalid_argument("matmul: inner dimensions differ");
    IntervalMatrix out(a.rows(), static_cast<std::size_t>(b.cols()));
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) {
            if (a.cols() == 0) continue;
            const auto jj = static_cast<Eigen::Index>(j);
            Interval acc = b(0, jj) * a(i, 0);
            for (std::size_t k = 1; k < a.cols(); ++k) acc = acc + b(static_cast<Eigen::Index>(k), jj) * a(i, k);
            out(i, j) = acc;
        }
    }
    return out;
}

IntervalMatrix matmul(const Eigen::MatrixXd& a, const IntervalMatrix& b)
{
    if (static_cast<std::size_t>(a.cols()) != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
    IntervalMatrix out(static_cast<std::size_t>(a.rows()), b.cols());
    for (std::size_t i = 0; i < out.rows(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        for (std::size_t j = 0; j < b.cols(); ++j) {
            if (b.rows() == 0) continue;
            Interval acc = a(ii, 0) * b(0, j);
            for (std::size_t k = 1; k < b.rows(); ++k) acc = acc + a(ii, static_cast<Eigen::Index>(k)) * b(k, j);
            out(i, j) = acc;
        }
    }
    return out;
}

IntervalVector matvec(const IntervalMatrix& a, const IntervalVector& x)
{
    if (a.cols() != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
    IntervalVector out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        if (a.cols() == 0) continue;
        Interval acc = a(i, 0) * x[0];
        for (std::size_t k = 1; k < a.cols(); ++k) acc = acc + a(i, k) * x[k];
        out[i] = acc;
    }
    return out;
}

IntervalVector matvec(const Eigen::MatrixXd& a, const IntervalVector& x)
{
    if (static_cast<std::size_t>(a.cols()) != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
    IntervalVector out(static_cast<std::size_t>(a.rows()));
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (x.empty()) continue;
        const auto ii = static_cast<Eigen::Index>(i);
        Interval acc = a(ii, 0) * x[0];
        for (std::size_t k = 1; k < x.size(); ++k) acc = acc + a(ii, static_cast<Eigen::Index>(k)) * x[k];
        out[i] = acc;
    }
    return out;
}

IntervalMatrix operator+(const IntervalMatrix& a, const IntervalMatrix& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("IntervalMatrix +: shape mismatch");
    IntervalMatrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) + b(i, j);
    return out;
}

IntervalMatrix operator-(const IntervalMatrix& a, const Eigen::MatrixXd& b)
{
    if (a.rows() != static_cast<std::size_t>(b.rows()) || a.cols() != static_cast<std::size_t>(b.cols())) {
        throw std::invalid_argument("IntervalMatrix -: shape mismatch");
    }
    IntervalMatrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            out(i, j) = a(i, j) - Interval(b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    return out;
}

SignSplit pos_neg_split(const Eigen::MatrixXd& c)
{
    SignSplit split{c.cwiseMax(0.0), Eigen::MatrixXd()};
    split.minus = c - split.plus;
    return split;
}

Eigen::VectorXd replace_index(const Eigen::VectorXd& x, std::size_t i, const Eigen::VectorXd& y)
{
    if (x.size() != y.size()) throw std::invalid_argument("replace_index: dimension mismatch");
    if (i >= static_cast<std::size_t>(x.size())) throw std::out_of_range("replace_index: index out of range");
    Eigen::VectorXd out = x;
    out(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(i));
    return out;
}

EmbeddingState::EmbeddingState(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi))
{
    if (lower.size() != upper.size()) throw std::invalid_argument("EmbeddingState: corner dimensions differ");
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
        if (!std::isfinite(lower(i)) || !std::isfinite(upper(i))) throw std::invalid_argument("EmbeddingState: non-finite corner");
        if (lower(i) > upper(i)) throw std::invalid_argument("EmbeddingState: lower corner exceeds upper corner");
    }
}

EmbeddingState::EmbeddingState(const IntervalVector& box) : lower(box.lower()), upper(box.upper()) {}

Eigen::VectorXd EmbeddingState::stacked() const
{
    Eigen::VectorXd out(2 * lower.size());
    out << lower, upper;
    return out;
}

bool se_leq(const EmbeddingState& a, const EmbeddingState& b)
{
    if (a.size() != b.size()) throw std::invalid_argument("se_leq: dimension mismatch");
    return (a.lower.array() <= b.lower.array()).all() && (b.upper.array() <= a.upper.array()).all();
}

bool se_nonnegative(const Eigen::VectorXd& stacked)
{
    if (stacked.size() % 2 != 0) throw std::invalid_argument("se_nonnegative: odd length");
    const Eigen::Index n = stacked.size() / 2;
    return (stacked.head(n).array() >= 0.0).all() && (stacked.tail(n).array() <= 0.0).all();
}

}  // namespace invkit
