#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "driftlab/errors.hpp"

namespace driftlab {

// Arithmetic expression trees over a declared set of variables, with exact
// symbolic differentiation. Grammar: + - * / ^, parentheses, numeric
// literals, the constant pi, and the functions
//   sin cos sinh cosh tanh coth exp log sqrt abs
// `abs` is only C^1 away from zeros of its argument; expressions using it
// report smooth()==false.

enum class UnaryFn {
    Neg,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Tanh,
    Coth,
    Exp,
    Log,
    Sqrt,
    Abs,
};

enum class BinaryOp { Add, Sub, Mul, Div, Pow };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    enum class Kind { Number, Variable, Unary, Binary } kind;
    double value = 0.0;   // Number
    int var = -1;         // Variable index
    UnaryFn fn = UnaryFn::Neg;
    BinaryOp op = BinaryOp::Add;
    ExprPtr a, b;

    static ExprPtr number(double v) {
        auto n = std::make_shared<ExprNode>();
        n->kind = Kind::Number;
        n->value = v;
        return n;
    }
    static ExprPtr variable(int idx) {
        auto n = std::make_shared<ExprNode>();
        n->kind = Kind::Variable;
        n->var = idx;
        return n;
    }
    static ExprPtr unary(UnaryFn f, ExprPtr child);
    static ExprPtr binary(BinaryOp o, ExprPtr lhs, ExprPtr rhs);
};

namespace detail {

inline bool is_number(const ExprPtr& e, double v) {
    return e->kind == ExprNode::Kind::Number && e->value == v;
}

inline bool is_const(const ExprPtr& e) { return e->kind == ExprNode::Kind::Number; }

inline double apply_unary(UnaryFn fn, double x) {
    switch (fn) {
        case UnaryFn::Neg: return -x;
        case UnaryFn::Sin: return std::sin(x);
        case UnaryFn::Cos: return std::cos(x);
        case UnaryFn::Sinh: return std::sinh(x);
        case UnaryFn::Cosh: return std::cosh(x);
        case UnaryFn::Tanh: return std::tanh(x);
        case UnaryFn::Coth: return std::cosh(x) / std::sinh(x);
        case UnaryFn::Exp: return std::exp(x);
        case UnaryFn::Log: return std::log(x);
        case UnaryFn::Sqrt: return std::sqrt(x);
        case UnaryFn::Abs: return std::fabs(x);
    }
    return 0.0;
}

inline double apply_binary(BinaryOp op, double x, double y) {
    switch (op) {
        case BinaryOp::Add: return x + y;
        case BinaryOp::Sub: return x - y;
        case BinaryOp::Mul: return x * y;
        case BinaryOp::Div: return x / y;
        case BinaryOp::Pow: return std::pow(x, y);
    }
    return 0.0;
}

} // namespace detail

inline ExprPtr ExprNode::unary(UnaryFn f, ExprPtr child) {
    if (detail::is_const(child))
        return number(detail::apply_unary(f, child->value));
    if (f == UnaryFn::Neg && child->kind == Kind::Unary && child->fn == UnaryFn::Neg)
        return child->a;
    auto n = std::make_shared<ExprNode>();
    n->kind = Kind::Unary;
    n->fn = f;
    n->a = std::move(child);
    return n;
}

inline ExprPtr ExprNode::binary(BinaryOp o, ExprPtr lhs, ExprPtr rhs) {
    using detail::is_const;
    using detail::is_number;
    if (is_const(lhs) && is_const(rhs))
        return number(detail::apply_binary(o, lhs->value, rhs->value));
    switch (o) {
        case BinaryOp::Add:
            if (is_number(lhs, 0)) return rhs;
            if (is_number(rhs, 0)) return lhs;
            break;
        case BinaryOp::Sub:
            if (is_number(rhs, 0)) return lhs;
            if (is_number(lhs, 0)) return unary(UnaryFn::Neg, rhs);
            break;
        case BinaryOp::Mul:
            if (is_number(lhs, 0) || is_number(rhs, 0)) return number(0);
            if (is_number(lhs, 1)) return rhs;
            if (is_number(rhs, 1)) return lhs;
            break;
        case BinaryOp::Div:
            if (is_number(lhs, 0)) return number(0);
            if (is_number(rhs, 1)) return lhs;
            break;
        case BinaryOp::Pow:
            if (is_number(rhs, 1)) return lhs;
            if (is_number(rhs, 0)) return number(1);
            break;
    }
    auto n = std::make_shared<ExprNode>();
    n->kind = Kind::Binary;
    n->op = o;
    n->a = std::move(lhs);
    n->b = std::move(rhs);
    return n;
}

namespace detail {

inline double eval_node(const ExprNode& n, const std::vector<double>& vars) {
    switch (n.kind) {
        case ExprNode::Kind::Number: return n.value;
        case ExprNode::Kind::Variable: return vars[static_cast<size_t>(n.var)];
        case ExprNode::Kind::Unary: return apply_unary(n.fn, eval_node(*n.a, vars));
        case ExprNode::Kind::Binary:
            return apply_binary(n.op, eval_node(*n.a, vars), eval_node(*n.b, vars));
    }
    return 0.0;
}

inline ExprPtr diff_node(const ExprPtr& e, int var);

inline ExprPtr diff_unary(const ExprPtr& e, int var) {
    const ExprPtr& u = e->a;
    ExprPtr du = diff_node(u, var);
    using N = ExprNode;
    switch (e->fn) {
        case UnaryFn::Neg: return N::unary(UnaryFn::Neg, du);
        case UnaryFn::Sin: return N::binary(BinaryOp::Mul, N::unary(UnaryFn::Cos, u), du);
        case UnaryFn::Cos:
            return N::unary(UnaryFn::Neg,
                            N::binary(BinaryOp::Mul, N::unary(UnaryFn::Sin, u), du));
        case UnaryFn::Sinh: return N::binary(BinaryOp::Mul, N::unary(UnaryFn::Cosh, u), du);
        case UnaryFn::Cosh: return N::binary(BinaryOp::Mul, N::unary(UnaryFn::Sinh, u), du);
        case UnaryFn::Tanh: {
            // d tanh = 1 - tanh^2
            ExprPtr t = N::unary(UnaryFn::Tanh, u);
            ExprPtr d = N::binary(BinaryOp::Sub, N::number(1),
                                  N::binary(BinaryOp::Mul, t, t));
            return N::binary(BinaryOp::Mul, d, du);
        }
        case UnaryFn::Coth: {
            // d coth = 1 - coth^2
            ExprPtr t = N::unary(UnaryFn::Coth, u);
            ExprPtr d = N::binary(BinaryOp::Sub, N::number(1),
                                  N::binary(BinaryOp::Mul, t, t));
            return N::binary(BinaryOp::Mul, d, du);
        }
        case UnaryFn::Exp: return N::binary(BinaryOp::Mul, e, du);
        case UnaryFn::Log: return N::binary(BinaryOp::Div, du, u);
        case UnaryFn::Sqrt:
            return N::binary(BinaryOp::Div, du,
                             N::binary(BinaryOp::Mul, N::number(2), e));
        case UnaryFn::Abs: {
            // sign(u) * du, written as u/|u| * du; singular at u == 0
            ExprPtr sign = N::binary(BinaryOp::Div, u, e);
            return N::binary(BinaryOp::Mul, sign, du);
        }
    }
    return N::number(0);
}

inline ExprPtr diff_node(const ExprPtr& e, int var) {
    using N = ExprNode;
    switch (e->kind) {
        case N::Kind::Number: return N::number(0);
        case N::Kind::Variable: return N::number(e->var == var ? 1 : 0);
        case N::Kind::Unary: return diff_unary(e, var);
        case N::Kind::Binary: {
            ExprPtr da = diff_node(e->a, var);
            ExprPtr db = diff_node(e->b, var);
            switch (e->op) {
                case BinaryOp::Add: return N::binary(BinaryOp::Add, da, db);
                case BinaryOp::Sub: return N::binary(BinaryOp::Sub, da, db);
                case BinaryOp::Mul:
                    return N::binary(BinaryOp::Add,
                                     N::binary(BinaryOp::Mul, da, e->b),
                                     N::binary(BinaryOp::Mul, e->a, db));
                case BinaryOp::Div:
                    // (a'b - ab') / b^2
                    return N::binary(
                        BinaryOp::Div,
                        N::binary(BinaryOp::Sub, N::binary(BinaryOp::Mul, da, e->b),
                                  N::binary(BinaryOp::Mul, e->a, db)),
                        N::binary(BinaryOp::Mul, e->b, e->b));
                case BinaryOp::Pow: {
                    if (is_const(e->b)) {
                        // c*a^(c-1)*a'  -- keeps r^p differentiable at r=0 for p>=1
                        double c = e->b->value;
                        ExprPtr p =
                            N::binary(BinaryOp::Pow, e->a, N::number(c - 1));
                        return N::binary(BinaryOp::Mul, N::number(c),
                                         N::binary(BinaryOp::Mul, p, da));
                    }
                    // a^b * (b' log a + b a'/a)
                    ExprPtr t1 = N::binary(BinaryOp::Mul, db, N::unary(UnaryFn::Log, e->a));
                    ExprPtr t2 = N::binary(BinaryOp::Div,
                                           N::binary(BinaryOp::Mul, e->b, da), e->a);
                    return N::binary(BinaryOp::Mul, e,
                                     N::binary(BinaryOp::Add, t1, t2));
                }
            }
        }
    }
    return N::number(0);
}

inline bool uses_abs(const ExprPtr& e) {
    if (!e) return false;
    if (e->kind == ExprNode::Kind::Unary && e->fn == UnaryFn::Abs) return true;
    return uses_abs(e->a) || uses_abs(e->b);
}

inline bool is_constant_tree(const ExprPtr& e) {
    if (!e) return true;
    if (e->kind == ExprNode::Kind::Variable) return false;
    return is_constant_tree(e->a) && is_constant_tree(e->b);
}

} // namespace detail

/// A parsed expression bound to a fixed, ordered list of variable names.
class Expression {
public:
    Expression() : root_(ExprNode::number(0)) {}
    Expression(ExprPtr root, std::vector<std::string> vars)
        : root_(std::move(root)), vars_(std::move(vars)) {}

    double operator()(const std::vector<double>& values) const {
        return detail::eval_node(*root_, values);
    }
    double operator()(double x) const { return (*this)(std::vector<double>{x}); }
    double operator()(double x, double y) const {
        return (*this)(std::vector<double>{x, y});
    }

    Expression derivative(const std::string& var) const {
        int idx = var_index(var);
        if (idx < 0)
            throw ParseError("unknown differentiation variable '" + var + "'");
        return Expression(detail::diff_node(root_, idx), vars_);
    }

    const std::vector<std::string>& variables() const { return vars_; }
    const ExprPtr& root() const { return root_; }

    /// False when the tree contains |.| (only piecewise C^1).
    bool smooth() const { return !detail::uses_abs(root_); }
    bool constant() const { return detail::is_constant_tree(root_); }

private:
    int var_index(const std::string& name) const {
        for (size_t i = 0; i < vars_.size(); ++i)
            if (vars_[i] == name) return static_cast<int>(i);
        return -1;
    }

    ExprPtr root_;
    std::vector<std::string> vars_;
};

namespace detail {

class Parser {
public:
    Parser(const std::string& text, const std::vector<std::string>& vars)
        : text_(text), vars_(vars) {}

    ExprPtr parse() {
        ExprPtr e = parse_sum();
        skip_ws();
        if (pos_ != text_.size())
            fail("unexpected trailing input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg + " at offset " + std::to_string(pos_) + " in \"" +
                         text_ + "\"");
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    ExprPtr parse_sum() {
        ExprPtr e = parse_term();
        for (;;) {
            if (eat('+'))
                e = ExprNode::binary(BinaryOp::Add, e, parse_term());
            else if (eat('-'))
                e = ExprNode::binary(BinaryOp::Sub, e, parse_term());
            else
                return e;
        }
    }

    ExprPtr parse_term() {
        ExprPtr e = parse_unary();
        for (;;) {
            if (eat('*'))
                e = ExprNode::binary(BinaryOp::Mul, e, parse_unary());
            else if (eat('/'))
                e = ExprNode::binary(BinaryOp::Div, e, parse_unary());
            else
                return e;
        }
    }

    ExprPtr parse_unary() {
        if (eat('-'))
            return ExprNode::unary(UnaryFn::Neg, parse_unary());
        if (eat('+'))
            return parse_unary();
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_atom();
        if (eat('^')) {
            // right associative; exponent may carry a sign
            ExprPtr expo = parse_unary_power();
            return ExprNode::binary(BinaryOp::Pow, base, expo);
        }
        return base;
    }

    ExprPtr parse_unary_power() {
        if (eat('-'))
            return ExprNode::unary(UnaryFn::Neg, parse_unary_power());
        ExprPtr base = parse_atom();
        if (eat('^'))
            return ExprNode::binary(BinaryOp::Pow, base, parse_unary_power());
        return base;
    }

    ExprPtr parse_atom() {
        skip_ws();
        if (pos_ >= text_.size())
            fail("unexpected end of expression");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            ExprPtr e = parse_sum();
            if (!eat(')'))
                fail("missing ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
            return parse_ident();
        fail(std::string("unexpected character '") + c + "'");
    }

    ExprPtr parse_number() {
        size_t start = pos_;
        size_t consumed = 0;
        double v = 0;
        try {
            v = std::stod(text_.substr(start), &consumed);
        } catch (const std::exception&) {
            fail("invalid numeric literal");
        }
        pos_ = start + consumed;
        return ExprNode::number(v);
    }

    ExprPtr parse_ident() {
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string name = text_.substr(start, pos_ - start);

        static const struct {
            const char* name;
            UnaryFn fn;
        } kFns[] = {
            {"sin", UnaryFn::Sin},   {"cos", UnaryFn::Cos},   {"sinh", UnaryFn::Sinh},
            {"cosh", UnaryFn::Cosh}, {"tanh", UnaryFn::Tanh}, {"coth", UnaryFn::Coth},
            {"exp", UnaryFn::Exp},   {"log", UnaryFn::Log},   {"sqrt", UnaryFn::Sqrt},
            {"abs", UnaryFn::Abs},
        };
        for (const auto& f : kFns) {
            if (name == f.name) {
                if (!eat('('))
                    fail("expected '(' after function '" + name + "'");
                ExprPtr arg = parse_sum();
                if (!eat(')'))
                    fail("missing ')' after argument of '" + name + "'");
                return ExprNode::unary(f.fn, arg);
            }
        }
        if (name == "pi")
            return ExprNode::number(3.14159265358979323846);
        for (size_t i = 0; i < vars_.size(); ++i)
            if (vars_[i] == name)
                return ExprNode::variable(static_cast<int>(i));
        pos_ = start;
        fail("unknown identifier '" + name + "'");
    }

    const std::string& text_;
    const std::vector<std::string>& vars_;
    size_t pos_ = 0;
};

} // namespace detail

inline Expression parse_expression(const std::string& text,
                                   std::vector<std::string> vars) {
    detail::Parser p(text, vars);
    ExprPtr root = p.parse();
    return Expression(std::move(root), std::move(vars));
}

} // namespace driftlab
