#pragma once

// Small arithmetic language for writing age-dependent coefficients in config
// files.
//
//   expr   := term (('+' | '-') term)*
//   term   := factor (('*' | '/') factor)*
//   factor := ['-'] atom ['^' atom]
//   atom   := number | ident | ident '(' args ')' | '(' expr ')'
//
// Identifiers: `a`, `alpha`. Functions: exp(x), abs(x), chi(lo, hi) and the
// explicit-argument form chi(x, lo, hi). chi is the indicator of [lo, hi),
// closed at the right end when hi is the maximum age.

#include <cctype>
#include <charconv>
#include <limits>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "repnum/errors.hpp"

namespace repnum {

class Expression {
public:
    enum class Kind { Number, Variable, Negate, Add, Subtract, Multiply, Divide, Power, Call };
    enum class Variable { Age, Alpha };
    enum class Function { Exp, Abs, Chi };

    /// Evaluation context: values of the two variables and the maximum age
    /// (needed by chi's closed right end).
    struct Point {
        double a = 0.0;
        double alpha = 0.0;
        double a_dagger = std::numeric_limits<double>::infinity();
    };

    static Expression number(double v) {
        Expression e(Kind::Number);
        e.value_ = v;
        return e;
    }
    static Expression variable(Variable v) {
        Expression e(Kind::Variable);
        e.variable_ = v;
        return e;
    }
    static Expression unary(Kind kind, Expression operand) {
        Expression e(kind);
        e.children_.push_back(std::move(operand));
        return e;
    }
    static Expression binary(Kind kind, Expression lhs, Expression rhs) {
        Expression e(kind);
        e.children_.push_back(std::move(lhs));
        e.children_.push_back(std::move(rhs));
        return e;
    }
    static Expression call(Function f, std::vector<Expression> args) {
        Expression e(Kind::Call);
        e.function_ = f;
        e.children_ = std::move(args);
        return e;
    }

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] double value() const noexcept { return value_; }
    [[nodiscard]] const std::vector<Expression>& children() const noexcept { return children_; }

    /// True when the expression references `alpha`.
    [[nodiscard]] bool depends_on_alpha() const {
        if (kind_ == Kind::Variable) return variable_ == Variable::Alpha;
        for (const auto& c : children_) {
            if (c.depends_on_alpha()) return true;
        }
        return false;
    }

    /// Total on finite inputs: division by zero and negative powers of zero
    /// evaluate to 0.
    [[nodiscard]] double evaluate(const Point& p) const {
        switch (kind_) {
            case Kind::Number: return value_;
            case Kind::Variable: return variable_ == Variable::Age ? p.a : p.alpha;
            case Kind::Negate: return -children_[0].evaluate(p);
            case Kind::Add: return children_[0].evaluate(p) + children_[1].evaluate(p);
            case Kind::Subtract: return children_[0].evaluate(p) - children_[1].evaluate(p);
            case Kind::Multiply: return children_[0].evaluate(p) * children_[1].evaluate(p);
            case Kind::Divide: {
                const double den = children_[1].evaluate(p);
                return den == 0.0 ? 0.0 : children_[0].evaluate(p) / den;
            }
            case Kind::Power: {
                const double base = children_[0].evaluate(p);
                const double ex = children_[1].evaluate(p);
                if (base == 0.0 && ex < 0.0) return 0.0;
                return std::pow(base, ex);
            }
            case Kind::Call: return evaluate_call(p);
        }
        return 0.0;
    }

    [[nodiscard]] double operator()(double a, double alpha = 0.0,
                                    double a_dagger = std::numeric_limits<double>::infinity()) const {
        return evaluate({a, alpha, a_dagger});
    }

    /// Canonical text form with only the parentheses the grammar requires.
    [[nodiscard]] std::string render() const {
        switch (kind_) {
            case Kind::Number: {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.17g", value_);
                return buf;
            }
            case Kind::Variable: return variable_ == Variable::Age ? "a" : "alpha";
            case Kind::Negate: return "-" + children_[0].render_as_factor_body();
            case Kind::Add:
            case Kind::Subtract:
                return children_[0].render() + (kind_ == Kind::Add ? " + " : " - ") +
                       children_[1].render_as_term();
            case Kind::Multiply:
            case Kind::Divide:
                return children_[0].render_as_term() + (kind_ == Kind::Multiply ? "*" : "/") +
                       children_[1].render_as_factor();
            case Kind::Power:
                return children_[0].render_as_atom() + "^" + children_[1].render_as_atom();
            case Kind::Call: {
                std::string s = function_name(function_);
                s += "(";
                for (std::size_t i = 0; i < children_.size(); ++i) {
                    if (i) s += ", ";
                    s += children_[i].render();
                }
                return s + ")";
            }
        }
        return {};
    }

    friend bool operator==(const Expression& x, const Expression& y) {
        if (x.kind_ != y.kind_) return false;
        switch (x.kind_) {
            case Kind::Number: return x.value_ == y.value_;
            case Kind::Variable: return x.variable_ == y.variable_;
            case Kind::Call:
                if (x.function_ != y.function_) return false;
                break;
            default: break;
        }
        return x.children_ == y.children_;
    }

    static std::string function_name(Function f) {
        switch (f) {
            case Function::Exp: return "exp";
            case Function::Abs: return "abs";
            case Function::Chi: return "chi";
        }
        return {};
    }

private:
    explicit Expression(Kind kind) : kind_(kind) {}

    double evaluate_call(const Point& p) const {
        switch (function_) {
            case Function::Exp: return std::exp(children_[0].evaluate(p));
            case Function::Abs: return std::abs(children_[0].evaluate(p));
            case Function::Chi: {
                const bool explicit_arg = children_.size() == 3;
                const double x = explicit_arg ? children_[0].evaluate(p) : p.a;
                const double lo = children_[explicit_arg ? 1 : 0].evaluate(p);
                const double hi = children_[explicit_arg ? 2 : 1].evaluate(p);
                if (x >= lo && x < hi) return 1.0;
                return (x == hi && hi >= p.a_dagger) ? 1.0 : 0.0;
            }
        }
        return 0.0;
    }

    [[nodiscard]] bool is_atom() const {
        return kind_ == Kind::Number || kind_ == Kind::Variable || kind_ == Kind::Call;
    }
    [[nodiscard]] bool is_factor() const {
        return is_atom() || kind_ == Kind::Power || kind_ == Kind::Negate;
    }
    [[nodiscard]] bool is_term() const {
        return is_factor() || kind_ == Kind::Multiply || kind_ == Kind::Divide;
    }

    [[nodiscard]] std::string render_as_atom() const {
        return is_atom() ? render() : "(" + render() + ")";
    }
    // Operand of a unary minus: an atom, optionally raised to a power.
    [[nodiscard]] std::string render_as_factor_body() const {
        return (is_atom() || kind_ == Kind::Power) ? render() : "(" + render() + ")";
    }
    [[nodiscard]] std::string render_as_factor() const {
        return is_factor() ? render() : "(" + render() + ")";
    }
    [[nodiscard]] std::string render_as_term() const {
        return is_term() ? render() : "(" + render() + ")";
    }

    Kind kind_;
    double value_ = 0.0;
    Variable variable_ = Variable::Age;
    Function function_ = Function::Exp;
    std::vector<Expression> children_;
};

namespace detail {

class ExpressionParser {
public:
    explicit ExpressionParser(std::string_view src) : src_(src) {}

    Expression parse() {
        skip_space();
        if (pos_ >= src_.size()) {
            throw ParseError(ErrorCode::SyntaxError, pos_, "empty expression");
        }
        Expression e = parse_expr();
        skip_space();
        if (pos_ != src_.size()) {
            throw ParseError(ErrorCode::SyntaxError, pos_,
                             std::string("unexpected character '") + src_[pos_] + "'");
        }
        return e;
    }

private:
    Expression parse_expr() {
        Expression lhs = parse_term();
        for (;;) {
            skip_space();
            if (accept('+')) {
                lhs = Expression::binary(Expression::Kind::Add, std::move(lhs), parse_term());
            } else if (accept('-')) {
                lhs = Expression::binary(Expression::Kind::Subtract, std::move(lhs), parse_term());
            } else {
                return lhs;
            }
        }
    }

    Expression parse_term() {
        Expression lhs = parse_factor();
        for (;;) {
            skip_space();
            if (accept('*')) {
                lhs = Expression::binary(Expression::Kind::Multiply, std::move(lhs), parse_factor());
            } else if (accept('/')) {
                lhs = Expression::binary(Expression::Kind::Divide, std::move(lhs), parse_factor());
            } else {
                return lhs;
            }
        }
    }

    Expression parse_factor() {
        skip_space();
        const bool negate = accept('-');
        Expression base = parse_atom();
        skip_space();
        if (accept('^')) {
            base = Expression::binary(Expression::Kind::Power, std::move(base), parse_atom());
        }
        return negate ? Expression::unary(Expression::Kind::Negate, std::move(base)) : base;
    }

    Expression parse_atom() {
        skip_space();
        if (pos_ >= src_.size()) {
            throw ParseError(ErrorCode::SyntaxError, pos_, "unexpected end of expression");
        }
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            Expression inner = parse_expr();
            expect(')');
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        throw ParseError(ErrorCode::SyntaxError, pos_,
                         std::string("unexpected character '") + c + "'");
    }

    Expression parse_number() {
        const std::size_t start = pos_;
        double v = 0.0;
        const auto [ptr, ec] =
            std::from_chars(src_.data() + pos_, src_.data() + src_.size(), v,
                            std::chars_format::general);
        if (ec != std::errc{}) {
            throw ParseError(ErrorCode::SyntaxError, start, "malformed number");
        }
        pos_ = static_cast<std::size_t>(ptr - src_.data());
        return Expression::number(v);
    }

    Expression parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            ++pos_;
        }
        const std::string_view name = src_.substr(start, pos_ - start);
        skip_space();
        if (pos_ < src_.size() && src_[pos_] == '(') {
            Expression::Function f{};
            std::size_t min_args = 1, max_args = 1;
            if (name == "exp") {
                f = Expression::Function::Exp;
            } else if (name == "abs") {
                f = Expression::Function::Abs;
            } else if (name == "chi") {
                f = Expression::Function::Chi;
                min_args = 2;
                max_args = 3;
            } else {
                throw ParseError(ErrorCode::UnknownIdentifier, start,
                                 "unknown function '" + std::string(name) + "'");
            }
            ++pos_;
            std::vector<Expression> args;
            args.push_back(parse_expr());
            skip_space();
            while (accept(',')) {
                args.push_back(parse_expr());
                skip_space();
            }
            expect(')');
            if (args.size() < min_args || args.size() > max_args) {
                throw ParseError(ErrorCode::SyntaxError, start,
                                 "wrong number of arguments to '" + std::string(name) + "'");
            }
            return Expression::call(f, std::move(args));
        }
        if (name == "a") return Expression::variable(Expression::Variable::Age);
        if (name == "alpha") return Expression::variable(Expression::Variable::Alpha);
        throw ParseError(ErrorCode::UnknownIdentifier, start,
                         "unknown identifier '" + std::string(name) + "'");
    }

    void skip_space() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        skip_space();
        if (!accept(c)) {
            throw ParseError(ErrorCode::SyntaxError, pos_, std::string("expected '") + c + "'");
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

}  // namespace detail

[[nodiscard]] inline Expression parse_coefficient(std::string_view source) {
    return detail::ExpressionParser(source).parse();
}

}  // namespace repnum
