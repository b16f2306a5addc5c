#include "invkit/expr.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include <json.hpp>

namespace invkit {

namespace {

constexpr double kTiny = 0x1p-960;

std::shared_ptr<ExprNode> make(ExprKind kind)
{
    auto node = std::make_shared<ExprNode>();
    node->kind = kind;
    return node;
}

Expr raw_unary(ExprKind kind, Expr a)
{
    auto node = make(kind);
    node->a = std::move(a);
    return node;
}

Expr raw_binary(ExprKind kind, Expr a, Expr b)
{
    auto node = make(kind);
    node->a = std::move(a);
    node->b = std::move(b);
    return node;
}

Expr raw_pow(Expr a, int exponent)
{
    auto node = make(ExprKind::pow);
    node->a = std::move(a);
    node->exponent = exponent;
    return node;
}

Expr raw_func(Func f, Expr a)
{
    auto node = make(ExprKind::func);
    node->func = f;
    node->a = std::move(a);
    return node;
}

bool is_const(const Expr& e) { return e->kind == ExprKind::constant; }

// Exact folds only: a fold that rounds would change what interval evaluation
// encloses.
bool exact_add(double a, double b, double& r)
{
    r = a + b;
    if (!std::isfinite(r)) return false;
    const double bb = r - a;
    return (a - (r - bb)) + (b - bb) == 0.0;
}

bool exact_mul(double a, double b, double& r)
{
    r = a * b;
    if (!std::isfinite(r)) return false;
    if (a == 0.0 || b == 0.0) return true;
    return std::abs(r) >= kTiny && std::fma(a, b, -r) == 0.0;
}

bool exact_div(double a, double b, double& r)
{
    if (b == 0.0) return false;
    r = a / b;
    if (!std::isfinite(r)) return false;
    if (a == 0.0) return true;
    return std::abs(r) >= kTiny && std::fma(-r, b, a) == 0.0;
}

double real_pow(double x, int k)
{
    if (k < 0) return 1.0 / real_pow(x, -k);
    double result = 1.0;
    double base = x;
    auto e = static_cast<unsigned>(k);
    while (e > 0) {
        if (e & 1u) result *= base;
        e >>= 1u;
        if (e > 0) base *= base;
    }
    return result;
}

double real_func(Func f, double x)
{
    switch (f) {
    case Func::tanh: return std::tanh(x);
    case Func::exp: return std::exp(x);
    case Func::sin: return std::sin(x);
    case Func::cos: return std::cos(x);
    case Func::sqrt: return std::sqrt(x);
    case Func::abs: return std::abs(x);
    case Func::sign:
        if (x == 0.0) throw DomainError("sign: evaluated at 0");
        return x > 0.0 ? 1.0 : -1.0;
    }
    return 0.0;
}

Interval interval_func(Func f, const Interval& x)
{
    switch (f) {
    case Func::tanh: return tanh(x);
    case Func::exp: return exp(x);
    case Func::sin: return sin(x);
    case Func::cos: return cos(x);
    case Func::sqrt: return sqrt(x);
    case Func::abs: return abs(x);
    case Func::sign: return sign(x);
    }
    return x;
}

double apply_pow(double x, int k) { return real_pow(x, k); }
Interval apply_pow(const Interval& x, int k) { return pow_int(x, k); }
double apply_func(Func f, double x) { return real_func(f, x); }
Interval apply_func(Func f, const Interval& x) { return interval_func(f, x); }

}  // namespace

std::string Dims::variable_name(std::size_t index) const
{
    if (index < n) return "x" + std::to_string(index + 1);
    if (index < n + p) return "u" + std::to_string(index - n + 1);
    if (index < total()) return "w" + std::to_string(index - n - p + 1);
    throw std::out_of_range("variable index out of range");
}

std::string_view to_string(Func f)
{
    switch (f) {
    case Func::tanh: return "tanh";
    case Func::exp: return "exp";
    case Func::sin: return "sin";
    case Func::cos: return "cos";
    case Func::sqrt: return "sqrt";
    case Func::abs: return "abs";
    case Func::sign: return "sign";
    }
    return "?";
}

namespace ex {

Expr constant(double v)
{
    if (!std::isfinite(v)) throw std::invalid_argument("expression constants must be finite");
    auto node = make(ExprKind::constant);
    node->value = v;
    return node;
}

Expr variable(std::size_t index)
{
    auto node = make(ExprKind::variable);
    node->var = index;
    return node;
}

bool is_constant(const Expr& e, double v) { return e->kind == ExprKind::constant && e->value == v; }

Expr neg(Expr a)
{
    if (is_const(a)) return constant(-a->value);
    if (a->kind == ExprKind::neg) return a->a;
    return raw_unary(ExprKind::neg, std::move(a));
}

Expr add(Expr a, Expr b)
{
    if (is_constant(a, 0.0)) return b;
    if (is_constant(b, 0.0)) return a;
    double r = 0.0;
    if (is_const(a) && is_const(b) && exact_add(a->value, b->value, r)) return constant(r);
    return raw_binary(ExprKind::add, std::move(a), std::move(b));
}

Expr sub(Expr a, Expr b)
{
    if (is_constant(b, 0.0)) return a;
    if (is_constant(a, 0.0)) return neg(std::move(b));
    double r = 0.0;
    if (is_const(a) && is_const(b) && exact_add(a->value, -b->value, r)) return constant(r);
    return raw_binary(ExprKind::sub, std::move(a), std::move(b));
}

Expr mul(Expr a, Expr b)
{
    if (is_constant(a, 0.0) || is_constant(b, 0.0)) return constant(0.0);
    if (is_constant(a, 1.0)) return b;
    if (is_constant(b, 1.0)) return a;
    if (is_constant(a, -1.0)) return neg(std::move(b));
    if (is_constant(b, -1.0)) return neg(std::move(a));
    double r = 0.0;
    if (is_const(a) && is_const(b) && exact_mul(a->value, b->value, r)) return constant(r);
    return raw_binary(ExprKind::mul, std::move(a), std::move(b));
}

Expr div(Expr a, Expr b)
{
    if (is_constant(b, 1.0)) return a;
    if (is_const(b) && b->value != 0.0 && is_constant(a, 0.0)) return constant(0.0);
    double r = 0.0;
    if (is_const(a) && is_const(b) && exact_div(a->value, b->value, r)) return constant(r);
    return raw_binary(ExprKind::div, std::move(a), std::move(b));
}

Expr pow(Expr a, int exponent)
{
    if (exponent == 0) return constant(1.0);
    if (exponent == 1) return a;
    if (is_const(a) && (a->value != 0.0 || exponent > 0)) {
        const Interval r = pow_int(Interval(a->value), exponent);
        if (r.is_thin()) return constant(r.lo());
    }
    return raw_pow(std::move(a), exponent);
}

Expr func(Func f, Expr a)
{
    if (is_const(a)) {
        const double v = a->value;
        switch (f) {
        case Func::abs: return constant(std::abs(v));
        case Func::sign:
            if (v != 0.0) return constant(v > 0.0 ? 1.0 : -1.0);
            break;
        case Func::tanh:
        case Func::sin:
            if (v == 0.0) return constant(0.0);
            break;
        case Func::exp:
        case Func::cos:
            if (v == 0.0) return constant(1.0);
            break;
        case Func::sqrt:
            if (v >= 0.0) {
                const double r = std::sqrt(v);
                if (std::fma(-r, r, v) == 0.0) return constant(r);
            }
            break;
        }
    }
    return raw_func(f, std::move(a));
}

}  // namespace ex

// ---------------------------------------------------------------------------
// Parsing

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& message)
    : std::invalid_argument("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column)
{
}

namespace {

class Parser {
public:
    Parser(std::string_view text, const Dims& dims, std::size_t line) : text_(text), dims_(dims), line_(line) {}

    Expr parse()
    {
        skip_space();
        if (pos_ == text_.size()) fail("empty expression");
        Expr e = parse_sum();
        skip_space();
        if (pos_ != text_.size()) fail(std::string("unexpected '") + text_[pos_] + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& message) const { throw ParseError(line_, pos_ + 1, message); }

    void skip_space()
    {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' || text_[pos_] == '\r')) ++pos_;
    }

    bool accept(char c)
    {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expr parse_sum()
    {
        Expr lhs = parse_product();
        for (;;) {
            if (accept('+')) {
                lhs = raw_binary(ExprKind::add, lhs, parse_product());
            } else if (accept('-')) {
                lhs = raw_binary(ExprKind::sub, lhs, parse_product());
            } else {
                return lhs;
            }
        }
    }

    Expr parse_product()
    {
        Expr lhs = parse_unary();
        for (;;) {
            if (accept('*')) {
                lhs = raw_binary(ExprKind::mul, lhs, parse_unary());
            } else if (accept('/')) {
                lhs = raw_binary(ExprKind::div, lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    Expr parse_unary()
    {
        if (accept('-')) {
            skip_space();
            const std::size_t start = pos_;
            Expr operand = parse_unary();
            // A bare numeric literal after '-' is read as a negative constant.
            if (operand->kind == ExprKind::constant && start < text_.size() && is_number_start(text_[start]) &&
                !literal_continues_) {
                return ex::constant(-operand->value);
            }
            return raw_unary(ExprKind::neg, operand);
        }
        return parse_power();
    }

    Expr parse_power()
    {
        Expr base = parse_primary();
        while (accept('^')) {
            literal_continues_ = true;
            skip_space();
            const std::size_t start = pos_;
            bool negative = false;
            if (pos_ < text_.size() && text_[pos_] == '-') {
                negative = true;
                ++pos_;
            }
            const std::size_t digits = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (pos_ == digits) {
                pos_ = start;
                fail("exponent must be an integer literal");
            }
            if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E')) {
                pos_ = start;
                fail("non-integer exponent");
            }
            int k = 0;
            const auto [ptr, ec] = std::from_chars(text_.data() + digits, text_.data() + pos_, k);
            if (ec != std::errc() || ptr != text_.data() + pos_) {
                pos_ = start;
                fail("exponent out of range");
            }
            base = raw_pow(base, negative ? -k : k);
        }
        return base;
    }

    static bool is_number_start(char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == '.'; }

    Expr parse_primary()
    {
        skip_space();
        literal_continues_ = false;
        if (pos_ == text_.size()) fail("unexpected end of expression");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expr inner = parse_sum();
            if (!accept(')')) fail("expected ')'");
            literal_continues_ = true;
            return inner;
        }
        if (is_number_start(c)) return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        fail(std::string("unexpected '") + c + "'");
    }

    Expr parse_number()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
            if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
                pos_ = look;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            }
        }
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (ec != std::errc() || ptr != text_.data() + pos_ || !std::isfinite(v)) {
            pos_ = start;
            fail("malformed number");
        }
        return ex::constant(v);
    }

    Expr parse_identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
        const std::string_view name = text_.substr(start, pos_ - start);
        static const std::pair<std::string_view, Func> functions[] = {
            {"tanh", Func::tanh}, {"exp", Func::exp}, {"sin", Func::sin},
            {"cos", Func::cos},   {"sqrt", Func::sqrt}, {"abs", Func::abs},
        };
        for (const auto& [fname, f] : functions) {
            if (name == fname) {
                if (!accept('(')) fail("expected '(' after " + std::string(name));
                Expr arg = parse_sum();
                if (!accept(')')) fail("expected ')'");
                literal_continues_ = true;
                return raw_func(f, arg);
            }
        }
        const std::size_t index = variable_index(name);
        if (index == static_cast<std::size_t>(-1)) {
            pos_ = start;
            fail("unknown identifier '" + std::string(name) + "'");
        }
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == '(') fail("'" + std::string(name) + "' is not a function");
        return ex::variable(index);
    }

    std::size_t variable_index(std::string_view name) const
    {
        constexpr auto none = static_cast<std::size_t>(-1);
        if (name.size() < 2) return none;
        std::size_t k = 0;
        const auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), k);
        if (ec != std::errc() || ptr != name.data() + name.size() || k == 0 || name[1] == '0') return none;
        switch (name[0]) {
        case 'x': return k <= dims_.n ? k - 1 : none;
        case 'u': return k <= dims_.p ? dims_.n + k - 1 : none;
        case 'w': return k <= dims_.q ? dims_.n + dims_.p + k - 1 : none;
        default: return none;
        }
    }

    std::string_view text_;
    const Dims& dims_;
    std::size_t line_;
    std::size_t pos_ = 0;
    // Set once a primary has been followed by something that makes it more
    // than a bare literal (parentheses, exponent).
    bool literal_continues_ = false;
};

int precedence(const Expr& e)
{
    switch (e->kind) {
    case ExprKind::constant: return std::signbit(e->value) ? 3 : 5;
    case ExprKind::variable:
    case ExprKind::func: return 5;
    case ExprKind::pow: return 4;
    case ExprKind::neg: return 3;
    case ExprKind::mul:
    case ExprKind::div: return 2;
    case ExprKind::add:
    case ExprKind::sub: return 1;
    }
    return 0;
}

std::string format_number(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void print(const Expr& e, const Dims& dims, std::string& out)
{
    const auto wrap = [&](const Expr& child, bool parens) {
        if (parens) out += '(';
        print(child, dims, out);
        if (parens) out += ')';
    };
    switch (e->kind) {
    case ExprKind::constant: out += format_number(e->value); return;
    case ExprKind::variable: out += dims.variable_name(e->var); return;
    case ExprKind::neg:
        out += '-';
        wrap(e->a, precedence(e->a) < 3);
        return;
    case ExprKind::pow:
        wrap(e->a, precedence(e->a) < 5);
        out += '^';
        out += std::to_string(e->exponent);
        return;
    case ExprKind::func:
        out += to_string(e->func);
        out += '(';
        print(e->a, dims, out);
        out += ')';
        return;
    default: break;
    }
    const int prec = precedence(e);
    const char* op = e->kind == ExprKind::add ? " + " : e->kind == ExprKind::sub ? " - " : e->kind == ExprKind::mul ? "*" : "/";
    wrap(e->a, precedence(e->a) < prec);
    out += op;
    wrap(e->b, precedence(e->b) <= prec);
}

class Differentiator {
public:
    explicit Differentiator(std::size_t var) : var_(var) {}

    Expr operator()(const Expr& e)
    {
        if (auto it = memo_.find(e.get()); it != memo_.end()) return it->second;
        Expr d = compute(e);
        memo_.emplace(e.get(), d);
        return d;
    }

private:
    Expr compute(const Expr& e)
    {
        using namespace ex;
        switch (e->kind) {
        case ExprKind::constant: return constant(0.0);
        case ExprKind::variable: return constant(e->var == var_ ? 1.0 : 0.0);
        case ExprKind::neg: return neg((*this)(e->a));
        case ExprKind::add: return add((*this)(e->a), (*this)(e->b));
        case ExprKind::sub: return sub((*this)(e->a), (*this)(e->b));
        case ExprKind::mul: return add(mul((*this)(e->a), e->b), mul(e->a, (*this)(e->b)));
        case ExprKind::div: {
            const Expr da = (*this)(e->a);
            const Expr db = (*this)(e->b);
            if (is_constant(db, 0.0)) return div(da, e->b);
            return sub(div(da, e->b), div(mul(e->a, db), pow(e->b, 2)));
        }
        case ExprKind::pow: {
            const Expr da = (*this)(e->a);
            if (is_constant(da, 0.0)) return da;
            return mul(mul(constant(static_cast<double>(e->exponent)), pow(e->a, e->exponent - 1)), da);
        }
        case ExprKind::func: {
            const Expr da = (*this)(e->a);
            if (is_constant(da, 0.0)) return da;
            switch (e->func) {
            case Func::tanh: return mul(sub(constant(1.0), pow(e, 2)), da);
            case Func::exp: return mul(e, da);
            case Func::sin: return mul(func(Func::cos, e->a), da);
            case Func::cos: return mul(neg(func(Func::sin, e->a)), da);
            case Func::sqrt: return div(da, mul(constant(2.0), e));
            case Func::abs: return mul(func(Func::sign, e->a), da);
            case Func::sign: throw std::invalid_argument("derivative of sign is not representable");
            }
        }
        }
        throw std::logic_error("differentiate: unknown node");
    }

    std::size_t var_;
    std::unordered_map<const ExprNode*, Expr> memo_;
};

template <typename T>
T eval_node(const Expr& e, std::span<const T> env, std::unordered_map<const ExprNode*, T>& memo)
{
    if (auto it = memo.find(e.get()); it != memo.end()) return it->second;
    T r{};
    switch (e->kind) {
    case ExprKind::constant: r = T(e->value); break;
    case ExprKind::variable:
        if (e->var >= env.size()) throw std::out_of_range("environment does not cover variable");
        r = env[e->var];
        break;
    case ExprKind::neg: r = -eval_node(e->a, env, memo); break;
    case ExprKind::add: r = eval_node(e->a, env, memo) + eval_node(e->b, env, memo); break;
    case ExprKind::sub: r = eval_node(e->a, env, memo) - eval_node(e->b, env, memo); break;
    case ExprKind::mul: r = eval_node(e->a, env, memo) * eval_node(e->b, env, memo); break;
    case ExprKind::div: r = eval_node(e->a, env, memo) / eval_node(e->b, env, memo); break;
    case ExprKind::pow: r = apply_pow(eval_node(e->a, env, memo), e->exponent); break;
    case ExprKind::func: r = apply_func(e->func, eval_node(e->a, env, memo)); break;
    }
    memo.emplace(e.get(), r);
    return r;
}

}  // namespace

Expr parse_expr(std::string_view text, const Dims& dims, std::size_t line) { return Parser(text, dims, line).parse(); }

std::string to_string(const Expr& e, const Dims& dims)
{
    std::string out;
    print(e, dims, out);
    return out;
}

Expr differentiate(const Expr& e, std::size_t var) { return Differentiator(var)(e); }

double eval_real(const Expr& e, std::span<const double> env)
{
    std::unordered_map<const ExprNode*, double> memo;
    return eval_node<double>(e, env, memo);
}

Interval eval_interval(const Expr& e, std::span<const Interval> env)
{
    std::unordered_map<const ExprNode*, Interval> memo;
    return eval_node<Interval>(e, env, memo);
}

// ---------------------------------------------------------------------------
// Tape

Tape::Tape(const std::vector<Expr>& outputs, std::size_t num_vars) : num_vars_(num_vars)
{
    using Key = std::tuple<int, int, int, std::uint64_t, std::size_t, std::size_t, std::size_t>;
    std::map<Key, std::size_t> structural;
    std::unordered_map<const ExprNode*, std::size_t> by_node;
    constexpr auto none = static_cast<std::size_t>(-1);

    // Iterative post-order so deep expressions do not exhaust the stack.
    const auto visit = [&](const Expr& root) {
        std::vector<std::pair<const ExprNode*, bool>> stack{{root.get(), false}};
        while (!stack.empty()) {
            auto [node, expanded] = stack.back();
            stack.pop_back();
            if (by_node.count(node)) continue;
            if (!expanded) {
                stack.push_back({node, true});
                if (node->b) stack.push_back({node->b.get(), false});
                if (node->a) stack.push_back({node->a.get(), false});
                continue;
            }
            if (node->kind == ExprKind::variable && node->var >= num_vars) {
                throw std::invalid_argument("Tape: variable index exceeds environment size");
            }
            Op op{node->kind, node->func, node->exponent, node->value, node->var,
                  node->a ? by_node.at(node->a.get()) : none, node->b ? by_node.at(node->b.get()) : none};
            const Key key{static_cast<int>(op.kind), static_cast<int>(op.func), op.exponent,
                          std::bit_cast<std::uint64_t>(op.value), op.var, op.a, op.b};
            auto [it, inserted] = structural.emplace(key, ops_.size());
            if (inserted) ops_.push_back(op);
            by_node.emplace(node, it->second);
        }
    };
    outputs_.reserve(outputs.size());
    for (const auto& e : outputs) {
        visit(e);
        outputs_.push_back(by_node.at(e.get()));
    }
}

template <typename T>
void Tape::eval(std::span<const T> env, std::span<T> out) const
{
    if (env.size() < num_vars_) throw std::invalid_argument("Tape::eval: environment too small");
    if (out.size() != outputs_.size()) throw std::invalid_argument("Tape::eval: output size mismatch");
    std::vector<T> slots(ops_.size());
    for (std::size_t i = 0; i < ops_.size(); ++i) {
        const Op& op = ops_[i];
        switch (op.kind) {
        case ExprKind::constant: slots[i] = T(op.value); break;
        case ExprKind::variable: slots[i] = env[op.var]; break;
        case ExprKind::neg: slots[i] = -slots[op.a]; break;
        case ExprKind::add: slots[i] = slots[op.a] + slots[op.b]; break;
        case ExprKind::sub: slots[i] = slots[op.a] - slots[op.b]; break;
        case ExprKind::mul: slots[i] = slots[op.a] * slots[op.b]; break;
        case ExprKind::div: slots[i] = slots[op.a] / slots[op.b]; break;
        case ExprKind::pow: slots[i] = apply_pow(slots[op.a], op.exponent); break;
        case ExprKind::func: slots[i] = apply_func(op.func, slots[op.a]); break;
        }
    }
    for (std::size_t k = 0; k < outputs_.size(); ++k) out[k] = slots[outputs_[k]];
}

template void Tape::eval<double>(std::span<const double>, std::span<double>) const;
template void Tape::eval<Interval>(std::span<const Interval>, std::span<Interval>) const;

// ---------------------------------------------------------------------------
// Vector fields

VectorField parse_vector_field(const std::vector<std::string>& components, const Dims& dims)
{
    if (components.size() != dims.n) {
        throw std::invalid_argument("vector field has " + std::to_string(components.size()) + " components, expected n = " +
                                    std::to_string(dims.n));
    }
    VectorField f{dims, {}};
    for (std::size_t i = 0; i < components.size(); ++i) f.components.push_back(parse_expr(components[i], dims, i + 1));
    return f;
}

VectorField vector_field_from_json_text(std::string_view text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("system JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("n") || !j.contains("f")) {
        throw std::invalid_argument("system JSON: expected an object with fields n, p, q, f");
    }
    try {
        Dims dims{j.at("n").get<std::size_t>(), j.value("p", std::size_t{0}), j.value("q", std::size_t{0})};
        return parse_vector_field(j.at("f").get<std::vector<std::string>>(), dims);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("system JSON: ") + e.what());
    }
}

VectorField load_vector_field(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open system file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return vector_field_from_json_text(buffer.str());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

SymbolicJacobians jacobians(const VectorField& f)
{
    const Dims& d = f.dims;
    SymbolicJacobians j;
    j.jx.assign(d.n, std::vector<Expr>(d.n));
    j.ju.assign(d.n, std::vector<Expr>(d.p));
    j.jw.assign(d.n, std::vector<Expr>(d.q));
    for (std::size_t v = 0; v < d.total(); ++v) {
        // One differentiator per variable so shared subtrees differentiate once.
        Differentiator diff(v);
        for (std::size_t i = 0; i < d.n; ++i) {
            Expr e = diff(f.components[i]);
            if (v < d.n) {
                j.jx[i][v] = std::move(e);
            } else if (v < d.n + d.p) {
                j.ju[i][v - d.n] = std::move(e);
            } else {
                j.jw[i][v - d.n - d.p] = std::move(e);
            }
        }
    }
    return j;
}

Dynamics::Dynamics(VectorField field) : field_(std::move(field))
{
    const Dims& d = field_.dims;
    f_tape_ = Tape(field_.components, d.total());
    try {
        const SymbolicJacobians j = invkit::jacobians(field_);
        std::vector<Expr> entries;
        entries.reserve(d.n * d.total());
        for (const auto* block : {&j.jx, &j.ju, &j.jw})
            for (const auto& row : *block)
                for (const auto& e : row) entries.push_back(e);
        j_tape_ = Tape(entries, d.total());
        has_jacobians_ = true;
    } catch (const std::invalid_argument& e) {
        jacobian_issue_ = e.what();
    }
}

namespace {

template <typename T, typename V>
std::vector<T> concat_env(const V& x, const V& u, const V& w, const Dims& d)
{
    if (static_cast<std::size_t>(x.size()) != d.n || static_cast<std::size_t>(u.size()) != d.p ||
        static_cast<std::size_t>(w.size()) != d.q) {
        throw std::invalid_argument("dynamics: argument dimensions do not match (n, p, q)");
    }
    std::vector<T> env;
    env.reserve(d.total());
    for (const auto* v : {&x, &u, &w})
        for (std::size_t i = 0; i < static_cast<std::size_t>(v->size()); ++i) env.push_back((*v)[static_cast<Eigen::Index>(i)]);
    return env;
}

}  // namespace

Eigen::VectorXd Dynamics::eval(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& w) const
{
    const auto env = concat_env<double>(x, u, w, dims());
    Eigen::VectorXd out(static_cast<Eigen::Index>(dims().n));
    f_tape_.eval<double>(env, std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
    return out;
}

IntervalVector Dynamics::eval(const IntervalVector& x, const IntervalVector& u, const IntervalVector& w) const
{
    const auto env = concat_env<Interval>(x, u, w, dims());
    std::vector<Interval> out(dims().n);
    f_tape_.eval<Interval>(env, out);
    return IntervalVector(std::move(out));
}

JacobianIntervals Dynamics::jacobians(const IntervalVector& x, const IntervalVector& u, const IntervalVector& w) const
{
    if (!has_jacobians_) throw std::logic_error("Jacobians unavailable: " + jacobian_issue_);
    const Dims& d = dims();
    const auto env = concat_env<Interval>(x, u, w, d);
    std::vector<Interval> out(d.n * d.total());
    j_tape_.eval<Interval>(env, out);
    JacobianIntervals j{IntervalMatrix(d.n, d.n), IntervalMatrix(d.n, d.p), IntervalMatrix(d.n, d.q)};
    std::size_t k = 0;
    for (IntervalMatrix* m : {&j.jx, &j.ju, &j.jw})
        for (std::size_t r = 0; r < m->rows(); ++r)
            for (std::size_t c = 0; c < m->cols(); ++c) (*m)(r, c) = out[k++];
    return j;
}

void Dynamics::jacobians(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& w, Eigen::MatrixXd& jx,
                         Eigen::MatrixXd& ju, Eigen::MatrixXd& jw) const
{
    if (!has_jacobians_) throw std::logic_error("Jacobians unavailable: " + jacobian_issue_);
    const Dims& d = dims();
    const auto env = concat_env<double>(x, u, w, d);
    std::vector<double> out(d.n * d.total());
    j_tape_.eval<double>(env, out);
    const auto n = static_cast<Eigen::Index>(d.n);
    jx.resize(n, n);
    ju.resize(n, static_cast<Eigen::Index>(d.p));
    jw.resize(n, static_cast<Eigen::Index>(d.q));
    std::size_t k = 0;
    for (Eigen::MatrixXd* m : {&jx, &ju, &jw})
        for (Eigen::Index r = 0; r < m->rows(); ++r)
            for (Eigen::Index c = 0; c < m->cols(); ++c) (*m)(r, c) = out[k++];
}

}  // namespace invkit
