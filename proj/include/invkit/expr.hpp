#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "invkit/interval.hpp"

namespace invkit {

/// Sizes of the state, input and disturbance. Variables are addressed by a
/// flat index: x1..xn are 0..n-1, then u1..up, then w1..wq.
struct Dims {
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t q = 0;

    std::size_t total() const { return n + p + q; }
    std::string variable_name(std::size_t index) const;
    friend bool operator==(const Dims&, const Dims&) = default;
};

enum class ExprKind { constant, variable, neg, add, sub, mul, div, pow, func };
// sign only arises from differentiating abs; it is not part of the grammar.
enum class Func { tanh, exp, sin, cos, sqrt, abs, sign };

std::string_view to_string(Func f);

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    ExprKind kind = ExprKind::constant;
    double value = 0.0;       // constant
    std::size_t var = 0;      // variable
    int exponent = 0;         // pow
    Func func = Func::tanh;   // func
    Expr a;
    Expr b;
};

namespace ex {
Expr constant(double v);
Expr variable(std::size_t index);
Expr neg(Expr a);
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr mul(Expr a, Expr b);
Expr div(Expr a, Expr b);
Expr pow(Expr a, int exponent);
Expr func(Func f, Expr a);
bool is_constant(const Expr& e, double v);
}  // namespace ex

class ParseError : public std::invalid_argument {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& message);
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Parses one expression. `line` is only used in error messages.
Expr parse_expr(std::string_view text, const Dims& dims, std::size_t line = 1);
std::string to_string(const Expr& e, const Dims& dims);

/// Partial derivative with respect to the variable with flat index `var`.
/// Throws std::invalid_argument when the derivative leaves the grammar
/// (differentiating sign).
Expr differentiate(const Expr& e, std::size_t var);

double eval_real(const Expr& e, std::span<const double> env);
Interval eval_interval(const Expr& e, std::span<const Interval> env);

/// A set of expressions flattened into a straight-line program with shared
/// subexpressions evaluated once.
class Tape {
public:
    Tape() = default;
    Tape(const std::vector<Expr>& outputs, std::size_t num_vars);

    std::size_t num_outputs() const { return outputs_.size(); }
    std::size_t num_vars() const { return num_vars_; }
    std::size_t size() const { return ops_.size(); }

    template <typename T>
    void eval(std::span<const T> env, std::span<T> out) const;

private:
    struct Op {
        ExprKind kind;
        Func func;
        int exponent;
        double value;
        std::size_t var;
        std::size_t a;
        std::size_t b;
    };
    std::vector<Op> ops_;
    std::vector<std::size_t> outputs_;
    std::size_t num_vars_ = 0;
};

extern template void Tape::eval<double>(std::span<const double>, std::span<double>) const;
extern template void Tape::eval<Interval>(std::span<const Interval>, std::span<Interval>) const;

/// f(x, u, w) with one expression per state component.
struct VectorField {
    Dims dims;
    std::vector<Expr> components;
};

VectorField parse_vector_field(const std::vector<std::string>& components, const Dims& dims);
/// System JSON: {"n":..,"p":..,"q":..,"f":["...", ...]}.
VectorField load_vector_field(const std::filesystem::path& path);
VectorField vector_field_from_json_text(std::string_view text);

struct SymbolicJacobians {
    std::vector<std::vector<Expr>> jx;  // n x n
    std::vector<std::vector<Expr>> ju;  // n x p
    std::vector<std::vector<Expr>> jw;  // n x q
};

SymbolicJacobians jacobians(const VectorField& f);

struct JacobianIntervals {
    IntervalMatrix jx;
    IntervalMatrix ju;
    IntervalMatrix jw;
};

/// Compiled f and (when differentiable in-grammar) its Jacobians.
class Dynamics {
public:
    explicit Dynamics(VectorField field);

    const Dims& dims() const { return field_.dims; }
    const VectorField& field() const { return field_; }
    bool has_jacobians() const { return has_jacobians_; }
    const std::string& jacobian_issue() const { return jacobian_issue_; }

    Eigen::VectorXd eval(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& w) const;
    IntervalVector eval(const IntervalVector& x, const IntervalVector& u, const IntervalVector& w) const;
    /// Throws std::logic_error if has_jacobians() is false.
    JacobianIntervals jacobians(const IntervalVector& x, const IntervalVector& u, const IntervalVector& w) const;
    void jacobians(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& w, Eigen::MatrixXd& jx,
                   Eigen::MatrixXd& ju, Eigen::MatrixXd& jw) const;

private:
    VectorField field_;
    Tape f_tape_;
    Tape j_tape_;
    bool has_jacobians_ = false;
    std::string jacobian_issue_;
};

}  // namespace invkit
