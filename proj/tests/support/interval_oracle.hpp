#pragma once

// Containment oracle for interval operations. Each sample is first judged in
// long double with a relative margin far above libm's long double error; only
// samples inside the margin of an endpoint fall through to MPFR with directed
// rounding, which brackets the exact value.

#include <mpfr.h>

#include <algorithm>
#include <array>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "invkit/interval.hpp"

namespace invkit::testing {

enum class Op { add, sub, mul, div, matmul, tanh, exp, sin, cos, sqrt, pow_int, reciprocal, abs, relu, log, atanh, sigmoid };

inline constexpr std::array<Op, 17> kAllOps = {Op::add,  Op::sub,     Op::mul,        Op::div, Op::matmul, Op::tanh,
                                               Op::exp,  Op::sin,     Op::cos,        Op::sqrt, Op::pow_int, Op::reciprocal,
                                               Op::abs,  Op::relu,    Op::log,        Op::atanh, Op::sigmoid};

inline std::string op_name(Op op)
{
    static const char* names[] = {"add",  "sub",  "mul",     "div",        "matmul", "tanh", "exp",  "sin",    "cos",
                                  "sqrt", "pow_int", "reciprocal", "abs", "relu",   "log",  "atanh", "sigmoid"};
    return names[static_cast<int>(op)];
}

constexpr std::size_t kMatDim = 3;

struct OpInstance {
    Op op = Op::add;
    Interval a;
    Interval b;
    int exponent = 0;
    IntervalMatrix A;
    IntervalMatrix B;
};

struct OracleStats {
    std::size_t samples = 0;
    std::size_t violations = 0;
    std::size_t exact_fallbacks = 0;
    std::string first_violation;
};

namespace detail {

inline double log_uniform(std::mt19937_64& rng, double lo_exp, double hi_exp)
{
    return std::pow(10.0, std::uniform_real_distribution<double>(lo_exp, hi_exp)(rng));
}

/// Random interval with magnitude and width spread over several decades.
inline Interval random_interval(std::mt19937_64& rng, double max_exp = 1.0)
{
    const double scale = log_uniform(rng, -3.0, max_exp);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double c = scale * u(rng);
    const double w = std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? 0.0 : scale * log_uniform(rng, -8.0, 0.3);
    return {c - 0.5 * w, c + 0.5 * w};
}

inline Interval positive_interval(std::mt19937_64& rng)
{
    const double lo = log_uniform(rng, -4.0, 2.0);
    return {lo, lo * (1.0 + log_uniform(rng, -8.0, 0.5))};
}

inline Interval nonzero_interval(std::mt19937_64& rng)
{
    const Interval p = positive_interval(rng);
    return std::bernoulli_distribution(0.5)(rng) ? p : -p;
}

inline Interval open_unit_interval(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-0.999999, 0.999999);
    double a = u(rng);
    double b = u(rng);
    if (a > b) std::swap(a, b);
    return {a, b};
}

/// Point of [lo, hi]; endpoints are hit on purpose every so often.
inline double sample(const Interval& iv, std::mt19937_64& rng, std::size_t k)
{
    if (k % 97 == 0) return iv.lo();
    if (k % 97 == 1) return iv.hi();
    const double t = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const double x = iv.lo() + t * (iv.hi() - iv.lo());
    return std::clamp(x, iv.lo(), iv.hi());
}

inline long double eval_ld(Op op, double x, double y, int exponent)
{
    const long double X = x;
    const long double Y = y;
    switch (op) {
    case Op::add: return X + Y;
    case Op::sub: return X - Y;
    case Op::mul: return X * Y;
    case Op::div: return X / Y;
    case Op::tanh: return std::tanh(X);
    case Op::exp: return std::exp(X);
    case Op::sin: return std::sin(X);
    case Op::cos: return std::cos(X);
    case Op::sqrt: return std::sqrt(X);
    case Op::pow_int: return std::pow(X, exponent);
    case Op::reciprocal: return 1.0L / X;
    case Op::abs: return std::fabs(X);
    case Op::relu: return X > 0 ? X : 0.0L;
    case Op::log: return std::log(X);
    case Op::atanh: return std::atanh(X);
    case Op::sigmoid: return 1.0L / (1.0L + std::exp(-X));
    case Op::matmul: break;
    }
    return 0.0L;
}

class Mpfr {
public:
    explicit Mpfr(mpfr_prec_t prec = 256) { mpfr_init2(v_, prec); }
    ~Mpfr() { mpfr_clear(v_); }
    Mpfr(const Mpfr&) = delete;
    Mpfr& operator=(const Mpfr&) = delete;
    mpfr_ptr get() { return v_; }

private:
    mpfr_t v_;
};

/// r <= f(x, y) (rnd = RNDD) or r >= f(x, y) (rnd = RNDU).
inline void eval_mpfr(Op op, double x, double y, int exponent, mpfr_rnd_t rnd, mpfr_ptr r)
{
    const mpfr_rnd_t flip = rnd == MPFR_RNDD ? MPFR_RNDU : MPFR_RNDD;
    Mpfr X;
    mpfr_set_d(X.get(), x, MPFR_RNDN);
    switch (op) {
    case Op::add: mpfr_add_d(r, X.get(), y, rnd); return;
    case Op::sub: mpfr_sub_d(r, X.get(), y, rnd); return;
    case Op::mul: mpfr_mul_d(r, X.get(), y, rnd); return;
    case Op::div: mpfr_div_d(r, X.get(), y, rnd); return;
    case Op::tanh: mpfr_tanh(r, X.get(), rnd); return;
    case Op::exp: mpfr_exp(r, X.get(), rnd); return;
    case Op::sin: mpfr_sin(r, X.get(), rnd); return;
    case Op::cos: mpfr_cos(r, X.get(), rnd); return;
    case Op::sqrt: mpfr_sqrt(r, X.get(), rnd); return;
    case Op::pow_int: mpfr_pow_si(r, X.get(), exponent, rnd); return;
    case Op::reciprocal: mpfr_si_div(r, 1, X.get(), rnd); return;
    case Op::abs: mpfr_abs(r, X.get(), rnd); return;
    case Op::relu: mpfr_set_d(r, x > 0.0 ? x : 0.0, rnd); return;
    case Op::log: mpfr_log(r, X.get(), rnd); return;
    case Op::atanh: mpfr_atanh(r, X.get(), rnd); return;
    case Op::sigmoid: {
        // 1 / (1 + exp(-x)) is decreasing in exp(-x).
        mpfr_neg(X.get(), X.get(), MPFR_RNDN);
        mpfr_exp(r, X.get(), flip);
        mpfr_add_ui(r, r, 1, flip);
        mpfr_ui_div(r, 1, r, rnd);
        return;
    }
    case Op::matmul: break;
    }
}

/// Judges exact value in [lo, hi] from an approximation v with |v - exact| <= tol,
/// calling `exact` for a bracketing pair when the margin is inconclusive.
template <typename Exact>
bool judge(long double v, long double tol, const Interval& out, OracleStats& stats, Exact&& exact)
{
    if (v - tol >= out.lo() && v + tol <= out.hi()) return true;
    ++stats.exact_fallbacks;
    Mpfr lo;
    Mpfr hi;
    exact(lo.get(), hi.get());
    return mpfr_cmp_d(lo.get(), out.lo()) >= 0 && mpfr_cmp_d(hi.get(), out.hi()) <= 0;
}

// 2^-58 relative: libm long double results are good to a few units in 2^-63.
inline constexpr long double kRelTol = 0x1.0p-58L;
inline constexpr long double kAbsTol = 0x1.0p-16000L;

}  // namespace detail

inline OpInstance random_instance(Op op, std::mt19937_64& rng)
{
    using namespace detail;
    OpInstance inst;
    inst.op = op;
    switch (op) {
    case Op::add:
    case Op::sub:
    case Op::mul:
        inst.a = random_interval(rng);
        inst.b = random_interval(rng);
        break;
    case Op::div:
        inst.a = random_interval(rng);
        inst.b = nonzero_interval(rng);
        break;
    case Op::matmul: {
        inst.A = IntervalMatrix(kMatDim, kMatDim);
        inst.B = IntervalMatrix(kMatDim, kMatDim);
        for (std::size_t i = 0; i < kMatDim; ++i) {
            for (std::size_t j = 0; j < kMatDim; ++j) {
                inst.A(i, j) = random_interval(rng);
                inst.B(i, j) = random_interval(rng);
            }
        }
        break;
    }
    case Op::tanh:
    case Op::sigmoid:
    case Op::abs:
    case Op::relu: inst.a = random_interval(rng, 1.5); break;
    case Op::exp: inst.a = random_interval(rng, 2.0); break;
    case Op::sin:
    case Op::cos: inst.a = random_interval(rng, 2.0); break;
    case Op::sqrt:
    case Op::log: inst.a = positive_interval(rng); break;
    case Op::reciprocal: inst.a = nonzero_interval(rng); break;
    case Op::atanh: inst.a = open_unit_interval(rng); break;
    case Op::pow_int: {
        inst.exponent = std::uniform_int_distribution<int>(-3, 6)(rng);
        inst.a = inst.exponent < 0 ? nonzero_interval(rng) : random_interval(rng);
        break;
    }
    }
    return inst;
}

/// Evaluates the interval operation once and checks `samples` points of its inputs.
inline OracleStats check_instance(const OpInstance& inst, std::size_t samples, std::mt19937_64& rng)
{
    using namespace detail;
    OracleStats stats;
    const auto report = [&](const std::string& what) {
        ++stats.violations;
        if (stats.first_violation.empty()) stats.first_violation = what;
    };

    if (inst.op == Op::matmul) {
        const IntervalMatrix C = matmul(inst.A, inst.B);
        std::array<double, kMatDim * kMatDim> a{};
        std::array<double, kMatDim * kMatDim> b{};
        for (std::size_t s = 0; s < samples; ++s) {
            for (std::size_t k = 0; k < kMatDim * kMatDim; ++k) {
                a[k] = sample(inst.A(k / kMatDim, k % kMatDim), rng, s + k);
                b[k] = sample(inst.B(k / kMatDim, k % kMatDim), rng, s + 3 * k);
            }
            for (std::size_t i = 0; i < kMatDim; ++i) {
                for (std::size_t j = 0; j < kMatDim; ++j) {
                    long double v = 0.0L;
                    long double mag = 0.0L;
                    for (std::size_t k = 0; k < kMatDim; ++k) {
                        const long double t = static_cast<long double>(a[i * kMatDim + k]) * b[k * kMatDim + j];
                        v += t;
                        mag += std::fabs(t);
                    }
                    ++stats.samples;
                    const bool ok = judge(v, mag * kRelTol + kAbsTol, C(i, j), stats, [&](mpfr_ptr lo, mpfr_ptr hi) {
                        Mpfr t(2200);
                        mpfr_set_prec(lo, 2200);
                        mpfr_set_prec(hi, 2200);
                        mpfr_set_zero(lo, 1);
                        for (std::size_t k = 0; k < kMatDim; ++k) {
                            mpfr_set_d(t.get(), a[i * kMatDim + k], MPFR_RNDN);
                            mpfr_mul_d(t.get(), t.get(), b[k * kMatDim + j], MPFR_RNDN);  // exact at 2200 bits
                            mpfr_add(lo, lo, t.get(), MPFR_RNDN);                         // exact at 2200 bits
                        }
                        mpfr_set(hi, lo, MPFR_RNDN);
                    });
                    if (!ok) report("matmul entry (" + std::to_string(i) + "," + std::to_string(j) + ")");
                }
            }
        }
        return stats;
    }

    const bool binary = inst.op == Op::add || inst.op == Op::sub || inst.op == Op::mul || inst.op == Op::div;
    Interval out;
    switch (inst.op) {
    case Op::add: out = inst.a + inst.b; break;
    case Op::sub: out = inst.a - inst.b; break;
    case Op::mul: out = inst.a * inst.b; break;
    case Op::div: out = inst.a / inst.b; break;
    case Op::tanh: out = tanh(inst.a); break;
    case Op::exp: out = exp(inst.a); break;
    case Op::sin: out = sin(inst.a); break;
    case Op::cos: out = cos(inst.a); break;
    case Op::sqrt: out = sqrt(inst.a); break;
    case Op::pow_int: out = pow_int(inst.a, inst.exponent); break;
    case Op::reciprocal: out = reciprocal(inst.a); break;
    case Op::abs: out = abs(inst.a); break;
    case Op::relu: out = relu(inst.a); break;
    case Op::log: out = log(inst.a); break;
    case Op::atanh: out = atanh(inst.a); break;
    case Op::sigmoid: out = sigmoid(inst.a); break;
    case Op::matmul: break;
    }
    for (std::size_t s = 0; s < samples; ++s) {
        const double x = sample(inst.a, rng, s);
        const double y = binary ? sample(inst.b, rng, s / 97 + s) : 0.0;
        const long double v = eval_ld(inst.op, x, y, inst.exponent);
        ++stats.samples;
        const bool ok = judge(v, std::fabs(v) * kRelTol + kAbsTol, out, stats, [&](mpfr_ptr lo, mpfr_ptr hi) {
            eval_mpfr(inst.op, x, y, inst.exponent, MPFR_RNDD, lo);
            eval_mpfr(inst.op, x, y, inst.exponent, MPFR_RNDU, hi);
        });
        if (!ok) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s at x=%.17g y=%.17g outside [%.17g, %.17g]", op_name(inst.op).c_str(), x, y,
                          out.lo(), out.hi());
            report(buf);
        }
    }
    return stats;
}

}  // namespace invkit::testing
