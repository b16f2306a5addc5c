#pragma once

#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace invkit {

/// Endpoint rounding policy. `sound` rounds every endpoint outward so that
/// enclosures hold in machine arithmetic; `fast` uses round-to-nearest and is
/// NOT sound (results may miss the true range by a few ulp).
enum class RoundingMode { sound, fast };

void set_rounding_mode(RoundingMode mode);
RoundingMode rounding_mode();
RoundingMode parse_rounding_mode(std::string_view text);

/// Sets the rounding mode for the lifetime of the guard.
class ScopedRounding {
public:
    explicit ScopedRounding(RoundingMode mode) : previous_(rounding_mode()) { set_rounding_mode(mode); }
    ~ScopedRounding() { set_rounding_mode(previous_); }
    ScopedRounding(const ScopedRounding&) = delete;
    ScopedRounding& operator=(const ScopedRounding&) = delete;

private:
    RoundingMode previous_;
};

/// Raised when an elementary function is applied outside its domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Closed real interval [lo, hi] with finite endpoints.
class Interval {
public:
    Interval() = default;
    explicit Interval(double value);
    Interval(double lo, double hi);

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double width() const { return hi_ - lo_; }
    double midpoint() const;
    bool is_thin() const { return lo_ == hi_; }

    bool contains(double x) const { return lo_ <= x && x <= hi_; }
    bool contains(const Interval& other) const { return lo_ <= other.lo_ && other.hi_ <= hi_; }
    bool contains_zero() const { return lo_ <= 0.0 && 0.0 <= hi_; }

    friend bool operator==(const Interval& a, const Interval& b) { return a.lo_ == b.lo_ && a.hi_ == b.hi_; }

private:
    double lo_ = 0.0;
    double hi_ = 0.0;
};

Interval operator+(const Interval& a, const Interval& b);
Interval operator-(const Interval& a, const Interval& b);
Interval operator-(const Interval& a);
Interval operator*(const Interval& a, const Interval& b);
Interval operator/(const Interval& a, const Interval& b);
Interval operator*(double a, const Interval& b);

inline Interval add(const Interval& a, const Interval& b) { return a + b; }
inline Interval mul(const Interval& a, const Interval& b) { return a * b; }

Interval hull(const Interval& a, const Interval& b);
std::ostream& operator<<(std::ostream& os, const Interval& a);

/// Elementary functions with minimal (tightest up to rounding) images.
enum class ElementaryFunction { tanh, exp, sin, cos, sqrt, pow_int, reciprocal, abs, relu, log, atanh, sigmoid };

std::string_view to_string(ElementaryFunction fn);

Interval tanh(const Interval& a);
Interval exp(const Interval& a);
Interval log(const Interval& a);
Interval sin(const Interval& a);
Interval cos(const Interval& a);
Interval sqrt(const Interval& a);
Interval pow_int(const Interval& a, int exponent);
Interval reciprocal(const Interval& a);
Interval abs(const Interval& a);
Interval relu(const Interval& a);
Interval atanh(const Interval& a);
Interval sigmoid(const Interval& a);
/// Sign of an interval that excludes zero; zero inside is a DomainError.
Interval sign(const Interval& a);

/// Dispatches to the functions above; `exponent` is only read for pow_int.
Interval elem_minimal(ElementaryFunction fn, const Interval& a, int exponent = 0);

/// Sequence of intervals: a box in R^n.
class IntervalVector {
public:
    IntervalVector() = default;
    explicit IntervalVector(std::size_t n) : elems_(n) {}
    IntervalVector(std::initializer_list<Interval> elems) : elems_(elems) {}
    explicit IntervalVector(std::vector<Interval> elems) : elems_(std::move(elems)) {}
    IntervalVector(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);

    static IntervalVector thin(const Eigen::VectorXd& point);
    /// center +/- radius, with the addition rounded outward.
    static IntervalVector around(const Eigen::VectorXd& center, const Eigen::VectorXd& radius);

    std::size_t size() const { return elems_.size(); }
    bool empty() const { return elems_.empty(); }
    const Interval& operator[](std::size_t i) const { return elems_[i]; }
    Interval& operator[](std::size_t i) { return elems_[i]; }
    auto begin() const { return elems_.begin(); }
    auto end() const { return elems_.end(); }
    std::span<const Interval> span() const { return elems_; }

    Eigen::VectorXd lower() const;
    Eigen::VectorXd upper() const;
    Eigen::VectorXd width() const;
    Eigen::VectorXd midpoint() const;
    double max_width() const;

    bool contains(const Eigen::VectorXd& point) const;
    bool contains(const IntervalVector& inner) const;

    friend bool operator==(const IntervalVector& a, const IntervalVector& b) { return a.elems_ == b.elems_; }

private:
    std::vector<Interval> elems_;
};

IntervalVector hull(const IntervalVector& a, const IntervalVector& b);
IntervalVector operator+(const IntervalVector& a, const IntervalVector& b);
IntervalVector operator-(const IntervalVector& a, const IntervalVector& b);
std::ostream& operator<<(std::ostream& os, const IntervalVector& v);

/// Dense row-major grid of intervals.
class IntervalMatrix {
public:
    IntervalMatrix() = default;
    IntervalMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), entries_(rows * cols) {}
    explicit IntervalMatrix(const Eigen::MatrixXd& thin);
    IntervalMatrix(const Eigen::MatrixXd& lower, const Eigen::MatrixXd& upper);

    static IntervalMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    const Interval& operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }
    Interval& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }

    Eigen::MatrixXd lower() const;
    Eigen::MatrixXd upper() const;
    Eigen::MatrixXd midpoint() const;
    bool contains(const Eigen::MatrixXd& m) const;

    friend bool operator==(const IntervalMatrix& a, const IntervalMatrix& b)
    {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.entries_ == b.entries_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Interval> entries_;
};

/// Entry (i,j) is the interval sum over k of A(i,k) * B(k,j), accumulated in
/// ascending k.
IntervalMatrix matmul(const IntervalMatrix& a, const IntervalMatrix& b);
IntervalMatrix matmul(const IntervalMatrix& a, const Eigen::MatrixXd& b);
IntervalMatrix matmul(const Eigen::MatrixXd& a, const IntervalMatrix& b);
IntervalVector matvec(const IntervalMatrix& a, const IntervalVector& x);
IntervalVector matvec(const Eigen::MatrixXd& a, const IntervalVector& x);
IntervalMatrix operator+(const IntervalMatrix& a, const IntervalMatrix& b);
IntervalMatrix operator-(const IntervalMatrix& a, const Eigen::MatrixXd& b);

/// C = C_plus + C_minus with C_plus >= 0 and C_minus <= 0 entry-wise.
struct SignSplit {
    Eigen::MatrixXd plus;
    Eigen::MatrixXd minus;
};
SignSplit pos_neg_split(const Eigen::MatrixXd& c);

/// x with its i-th entry taken from y.
Eigen::VectorXd replace_index(const Eigen::VectorXd& x, std::size_t i, const Eigen::VectorXd& y);

/// Lower/upper corner pair, an element of T^{2n}_{>=0}.
struct EmbeddingState {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    EmbeddingState() = default;
    EmbeddingState(Eigen::VectorXd lo, Eigen::VectorXd hi);
    explicit EmbeddingState(const IntervalVector& box);

    std::size_t size() const { return static_cast<std::size_t>(lower.size()); }
    IntervalVector box() const { return {lower, upper}; }
    /// The stacked 2n vector (lower; upper).
    Eigen::VectorXd stacked() const;
};

/// Southeast order: a <=_SE b iff a.lower <= b.lower and b.upper <= a.upper,
/// i.e. box(b) is nested in box(a).
bool se_leq(const EmbeddingState& a, const EmbeddingState& b);

/// Lower half >= 0 and upper half <= 0 for a stacked 2n vector.
bool se_nonnegative(const Eigen::VectorXd& stacked);

namespace rounding {

/// Outward-rounded primitives on scalars. Each returns a bound on the exact
/// result of the operation on the given doubles.
double add_down(double a, double b);
double add_up(double a, double b);
double mul_down(double a, double b);
double mul_up(double a, double b);
double next_down(double x, int ulps = 1);
double next_up(double x, int ulps = 1);

}  // namespace rounding

}  // namespace invkit
