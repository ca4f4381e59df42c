#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <string_view>
#include <utility>

#include "elrr/errors.hpp"

namespace elrr {

// Small arithmetic expression language used for user-defined functions
// (frequency, forcing, Lambda).  Variables come from a fixed declared set.
enum class Var : int { s = 0, q, t, x, y, u };

inline constexpr std::array<std::string_view, 6> kVarNames = {"s", "q", "t",
                                                              "x", "y", "u"};

// Values for all declared variables; unset ones default to 0 and are only an
// error if the expression actually reads them... they are not tracked, so the
// caller binds everything the expression may mention.
struct Bindings {
    std::array<double, 6> v{};

    double& operator[](Var name) { return v[static_cast<int>(name)]; }
    double operator[](Var name) const { return v[static_cast<int>(name)]; }

    static Bindings one(Var name, double value) {
        Bindings b;
        b[name] = value;
        return b;
    }
};

struct expr_syntax_error : config_error {
    expr_syntax_error(const std::string& what, std::size_t column)
        : config_error(what + " at column " + std::to_string(column + 1)),
          column(column) {}
    std::size_t column;
};

namespace detail {

enum class UnOp { neg, sin, cos, tan, asin, atan, sqrt, exp, log, abs };
enum class BinOp { add, sub, mul, div, pow };

struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    enum class Kind { literal, variable, unary, binary } kind;
    double value = 0.0;           // literal
    Var var = Var::s;             // variable
    UnOp un = UnOp::neg;          // unary
    BinOp bin = BinOp::add;       // binary
    NodePtr a, b;
};

inline NodePtr lit(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::literal;
    n->value = v;
    return n;
}

inline NodePtr variable(Var v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::variable;
    n->var = v;
    return n;
}

inline bool is_lit(const NodePtr& n, double v) {
    return n->kind == ExprNode::Kind::literal && n->value == v;
}

inline NodePtr unary(UnOp op, NodePtr a);
inline NodePtr binary(BinOp op, NodePtr a, NodePtr b);

// Constant folding plus the 0/1 identities; keeps derivatives readable and
// cheap to evaluate.
inline NodePtr binary(BinOp op, NodePtr a, NodePtr b) {
    using K = ExprNode::Kind;
    if (a->kind == K::literal && b->kind == K::literal) {
        switch (op) {
            case BinOp::add: return lit(a->value + b->value);
            case BinOp::sub: return lit(a->value - b->value);
            case BinOp::mul: return lit(a->value * b->value);
            case BinOp::div:
                if (b->value != 0.0) return lit(a->value / b->value);
                break;
            case BinOp::pow: {
                double r = std::pow(a->value, b->value);
                if (std::isfinite(r)) return lit(r);
                break;
            }
        }
    }
    switch (op) {
        case BinOp::add:
            if (is_lit(a, 0.0)) return b;
            if (is_lit(b, 0.0)) return a;
            break;
        case BinOp::sub:
            if (is_lit(b, 0.0)) return a;
            if (is_lit(a, 0.0)) return unary(UnOp::neg, b);
            break;
        case BinOp::mul:
            if (is_lit(a, 0.0) || is_lit(b, 0.0)) return lit(0.0);
            if (is_lit(a, 1.0)) return b;
            if (is_lit(b, 1.0)) return a;
            break;
        case BinOp::div:
            if (is_lit(a, 0.0)) return lit(0.0);
            if (is_lit(b, 1.0)) return a;
            break;
        case BinOp::pow:
            if (is_lit(b, 1.0)) return a;
            if (is_lit(b, 0.0)) return lit(1.0);
            break;
    }
    auto n = std::make_shared<ExprNode>();
    n->kind = K::binary;
    n->bin = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline NodePtr unary(UnOp op, NodePtr a) {
    if (a->kind == ExprNode::Kind::literal) {
        double v = a->value;
        switch (op) {
            case UnOp::neg: return lit(-v);
            case UnOp::sin: return lit(std::sin(v));
            case UnOp::cos: return lit(std::cos(v));
            case UnOp::tan: return lit(std::tan(v));
            case UnOp::exp: return lit(std::exp(v));
            case UnOp::abs: return lit(std::abs(v));
            default: break;  // asin/sqrt/log fold only if in-domain
        }
        if (op == UnOp::asin && std::abs(v) <= 1.0) return lit(std::asin(v));
        if (op == UnOp::atan) return lit(std::atan(v));
        if (op == UnOp::sqrt && v >= 0.0) return lit(std::sqrt(v));
        if (op == UnOp::log && v > 0.0) return lit(std::log(v));
    }
    if (op == UnOp::neg && a->kind == ExprNode::Kind::unary &&
        a->un == UnOp::neg)
        return a->a;
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::unary;
    n->un = op;
    n->a = std::move(a);
    return n;
}

inline double eval_node(const ExprNode& n, const Bindings& env) {
    using K = ExprNode::Kind;
    switch (n.kind) {
        case K::literal: return n.value;
        case K::variable: return env[n.var];
        case K::unary: {
            double a = eval_node(*n.a, env);
            switch (n.un) {
                case UnOp::neg: return -a;
                case UnOp::sin: return std::sin(a);
                case UnOp::cos: return std::cos(a);
                case UnOp::tan: return std::tan(a);
                case UnOp::asin:
                    if (a < -1.0 || a > 1.0)
                        throw domain_error("asin argument outside [-1,1]");
                    return std::asin(a);
                case UnOp::atan: return std::atan(a);
                case UnOp::sqrt:
                    if (a < 0.0) throw domain_error("sqrt of negative value");
                    return std::sqrt(a);
                case UnOp::exp: return std::exp(a);
                case UnOp::log:
                    if (a <= 0.0)
                        throw domain_error("log of nonpositive value");
                    return std::log(a);
                case UnOp::abs: return std::abs(a);
            }
            break;
        }
        case K::binary: {
            double a = eval_node(*n.a, env);
            double b = eval_node(*n.b, env);
            switch (n.bin) {
                case BinOp::add: return a + b;
                case BinOp::sub: return a - b;
                case BinOp::mul: return a * b;
                case BinOp::div:
                    if (b == 0.0) throw domain_error("division by zero");
                    return a / b;
                case BinOp::pow: {
                    double r = std::pow(a, b);
                    if (!std::isfinite(r))
                        throw domain_error("pow outside real domain");
                    return r;
                }
            }
            break;
        }
    }
    throw error("corrupt expression node");
}

inline const char* un_name(UnOp op) {
    switch (op) {
        case UnOp::neg: return "-";
        case UnOp::sin: return "sin";
        case UnOp::cos: return "cos";
        case UnOp::tan: return "tan";
        case UnOp::asin: return "asin";
        case UnOp::atan: return "atan";
        case UnOp::sqrt: return "sqrt";
        case UnOp::exp: return "exp";
        case UnOp::log: return "log";
        case UnOp::abs: return "abs";
    }
    return "?";
}

inline void print_node(const ExprNode& n, std::string& out) {
    using K = ExprNode::Kind;
    switch (n.kind) {
        case K::literal: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", n.value);
            if (n.value < 0.0) {
                out += '(';
                out += buf;
                out += ')';
            } else {
                out += buf;
            }
            return;
        }
        case K::variable:
            out += kVarNames[static_cast<int>(n.var)];
            return;
        case K::unary:
            if (n.un == UnOp::neg) {
                out += "(-";
                print_node(*n.a, out);
                out += ')';
            } else {
                out += un_name(n.un);
                out += '(';
                print_node(*n.a, out);
                out += ')';
            }
            return;
        case K::binary: {
            const char* op = nullptr;
            switch (n.bin) {
                case BinOp::add: op = "+"; break;
                case BinOp::sub: op = "-"; break;
                case BinOp::mul: op = "*"; break;
                case BinOp::div: op = "/"; break;
                case BinOp::pow: op = "^"; break;
            }
            out += '(';
            print_node(*n.a, out);
            out += op;
            print_node(*n.b, out);
            out += ')';
            return;
        }
    }
}

NodePtr diff_node(const NodePtr& n, Var wrt);

inline NodePtr diff_node(const NodePtr& n, Var wrt) {
    using K = ExprNode::Kind;
    switch (n->kind) {
        case K::literal: return lit(0.0);
        case K::variable: return lit(n->var == wrt ? 1.0 : 0.0);
        case K::unary: {
            NodePtr da = diff_node(n->a, wrt);
            const NodePtr& a = n->a;
            switch (n->un) {
                case UnOp::neg: return unary(UnOp::neg, da);
                case UnOp::sin:
                    return binary(BinOp::mul, unary(UnOp::cos, a), da);
                case UnOp::cos:
                    return unary(UnOp::neg, binary(BinOp::mul,
                                                   unary(UnOp::sin, a), da));
                case UnOp::tan:
                    // 1/cos^2
                    return binary(
                        BinOp::div, da,
                        binary(BinOp::pow, unary(UnOp::cos, a), lit(2.0)));
                case UnOp::asin:
                    return binary(
                        BinOp::div, da,
                        unary(UnOp::sqrt,
                              binary(BinOp::sub, lit(1.0),
                                     binary(BinOp::pow, a, lit(2.0)))));
                case UnOp::atan:
                    return binary(
                        BinOp::div, da,
                        binary(BinOp::add, lit(1.0),
                               binary(BinOp::pow, a, lit(2.0))));
                case UnOp::sqrt:
                    return binary(
                        BinOp::div, da,
                        binary(BinOp::mul, lit(2.0), unary(UnOp::sqrt, a)));
                case UnOp::exp:
                    return binary(BinOp::mul, unary(UnOp::exp, a), da);
                case UnOp::log: return binary(BinOp::div, da, a);
                case UnOp::abs:
                    // d|a| = a/|a| da, undefined at 0 (runtime division error)
                    return binary(BinOp::mul,
                                  binary(BinOp::div, a, unary(UnOp::abs, a)),
                                  da);
            }
            break;
        }
        case K::binary: {
            const NodePtr& a = n->a;
            const NodePtr& b = n->b;
            NodePtr da = diff_node(a, wrt);
            NodePtr db = diff_node(b, wrt);
            switch (n->bin) {
                case BinOp::add: return binary(BinOp::add, da, db);
                case BinOp::sub: return binary(BinOp::sub, da, db);
                case BinOp::mul:
                    return binary(BinOp::add, binary(BinOp::mul, da, b),
                                  binary(BinOp::mul, a, db));
                case BinOp::div:
                    return binary(
                        BinOp::div,
                        binary(BinOp::sub, binary(BinOp::mul, da, b),
                               binary(BinOp::mul, a, db)),
                        binary(BinOp::pow, b, lit(2.0)));
                case BinOp::pow:
                    if (b->kind == K::literal) {
                        // c a^(c-1) a'
                        return binary(
                            BinOp::mul,
                            binary(BinOp::mul, b,
                                   binary(BinOp::pow, a,
                                          lit(b->value - 1.0))),
                            da);
                    }
                    // a^b (b' log a + b a'/a)
                    return binary(
                        BinOp::mul, binary(BinOp::pow, a, b),
                        binary(BinOp::add,
                               binary(BinOp::mul, db, unary(UnOp::log, a)),
                               binary(BinOp::mul, b, binary(BinOp::div, da, a))));
            }
            break;
        }
    }
    throw error("corrupt expression node");
}

}  // namespace detail

class Expression {
public:
    Expression() : root_(detail::lit(0.0)) {}
    explicit Expression(detail::NodePtr root) : root_(std::move(root)) {}

    double eval(const Bindings& env) const {
        return detail::eval_node(*root_, env);
    }
    // Single-variable convenience.
    double eval(Var name, double value) const {
        return eval(Bindings::one(name, value));
    }

    Expression derivative(Var wrt) const {
        return Expression(detail::diff_node(root_, wrt));
    }

    std::string str() const {
        std::string out;
        detail::print_node(*root_, out);
        return out;
    }

    bool is_constant() const {
        return root_->kind == detail::ExprNode::Kind::literal;
    }

    const detail::NodePtr& root() const { return root_; }

private:
    detail::NodePtr root_;
};

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr parse() {
        NodePtr e = sum();
        skip_ws();
        if (pos_ != text_.size())
            throw expr_syntax_error("unexpected trailing input", pos_);
        return e;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() &&
               (text_[pos_] == ' ' || text_[pos_] == '\t'))
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

    NodePtr sum() {
        NodePtr e = product();
        for (;;) {
            if (eat('+'))
                e = binary(BinOp::add, e, product());
            else if (eat('-'))
                e = binary(BinOp::sub, e, product());
            else
                return e;
        }
    }

    NodePtr product() {
        NodePtr e = unary_expr();
        for (;;) {
            if (eat('*'))
                e = binary(BinOp::mul, e, unary_expr());
            else if (eat('/'))
                e = binary(BinOp::div, e, unary_expr());
            else
                return e;
        }
    }

    // Unary minus binds looser than ^: -x^2 == -(x^2).
    NodePtr unary_expr() {
        if (eat('-')) return unary(UnOp::neg, unary_expr());
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (eat('^')) return binary(BinOp::pow, base, unary_expr());
        return base;
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= text_.size())
            throw expr_syntax_error("unexpected end of expression", pos_);
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = sum();
            if (!eat(')'))
                throw expr_syntax_error("expected ')'", pos_);
            return e;
        }
        if ((c >= '0' && c <= '9') || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        throw expr_syntax_error(std::string("unexpected character '") + c +
                                    "'",
                                pos_);
    }

    NodePtr number() {
        std::size_t start = pos_;
        const char* begin = text_.data() + pos_;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin)
            throw expr_syntax_error("malformed number", start);
        pos_ += static_cast<std::size_t>(end - begin);
        return lit(v);
    }

    NodePtr identifier() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                text_[pos_] == '_'))
            ++pos_;
        std::string name(text_.substr(start, pos_ - start));

        static const std::pair<std::string_view, UnOp> funcs[] = {
            {"sin", UnOp::sin},   {"cos", UnOp::cos}, {"tan", UnOp::tan},
            {"asin", UnOp::asin}, {"atan", UnOp::atan},
            {"sqrt", UnOp::sqrt}, {"exp", UnOp::exp}, {"log", UnOp::log},
            {"abs", UnOp::abs}};
        for (auto& [fname, op] : funcs) {
            if (name == fname) {
                if (!eat('('))
                    throw expr_syntax_error("expected '(' after function '" +
                                                name + "'",
                                            pos_);
                NodePtr arg = sum();
                if (!eat(')'))
                    throw expr_syntax_error("expected ')'", pos_);
                return unary(op, arg);
            }
        }
        if (name == "pi") return lit(3.14159265358979323846);
        for (std::size_t i = 0; i < kVarNames.size(); ++i)
            if (name == kVarNames[i]) return variable(static_cast<Var>(i));
        throw expr_syntax_error("unknown identifier '" + name + "'", start);
    }
};

}  // namespace detail

inline Expression parse_expression(std::string_view text) {
    return Expression(detail::Parser(text).parse());
}

}  // namespace elrr
