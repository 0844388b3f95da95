#pragma once

/**
 * Expression language for thermodynamic potentials M(S, X).
 *
 * Grammar (whitespace insignificant):
 *
 *   expr    := term   (('+' | '-') term)*
 *   term    := unary  (('*' | '/') unary)*
 *   unary   := '-' unary | power
 *   power   := primary ('^' unary)?          right-associative
 *   primary := number | identifier | function '(' expr ')' | '(' expr ')'
 *
 * Functions are sqrt, exp and ln. Identifiers are case-sensitive and must
 * name one of the two coordinates or a bound parameter. There is no implicit
 * multiplication. The AST is immutable and evaluates over double or Jet3.
 */

#include <array>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "thermocurv/errors.hpp"
#include "thermocurv/jet.hpp"
#include "thermocurv/state.hpp"

namespace thermocurv {

enum class BinaryOp { add, sub, mul, div, pow };
enum class Function { sqrt, exp, ln };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct Constant {
    double value;
};
struct CoordinateRef {
    int index;
};
struct ParameterRef {
    std::string name;
    double value;
};
struct Binary {
    BinaryOp op;
    ExprPtr lhs;
    ExprPtr rhs;
    /// For '^': the exponent does not depend on the coordinates.
    bool rhs_constant = false;
};
struct Negate {
    ExprPtr operand;
};
struct Call {
    Function fn;
    ExprPtr arg;
};

struct ExprNode {
    std::variant<Constant, CoordinateRef, ParameterRef, Binary, Negate, Call> node;
};

inline std::optional<Function> function_from_name(std::string_view name) {
    if (name == "sqrt") return Function::sqrt;
    if (name == "exp") return Function::exp;
    if (name == "ln") return Function::ln;
    return std::nullopt;
}

inline const char* function_name(Function fn) {
    switch (fn) {
    case Function::sqrt: return "sqrt";
    case Function::exp: return "exp";
    case Function::ln: return "ln";
    }
    return "?";
}

inline bool depends_on_coordinates(const ExprNode& e) {
    return std::visit(
        [](const auto& n) -> bool {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, CoordinateRef>) return true;
            else if constexpr (std::is_same_v<N, Binary>)
                return depends_on_coordinates(*n.lhs) || depends_on_coordinates(*n.rhs);
            else if constexpr (std::is_same_v<N, Negate>) return depends_on_coordinates(*n.operand);
            else if constexpr (std::is_same_v<N, Call>) return depends_on_coordinates(*n.arg);
            else return false;
        },
        e.node);
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace detail {

inline double divide(double a, double b) {
    if (!(std::abs(b) >= DivisionPolicy{}.floor)) throw DivisionByZero(b);
    return a / b;
}
inline Jet3 divide(const Jet3& a, const Jet3& b) { return thermocurv::divide(a, b); }

inline double pow_int(double a, long long n) {
    if (n < 0) return divide(1.0, pow_int(a, -n));
    double result = 1.0;
    while (n > 0) {
        if (n & 1) result *= a;
        n >>= 1;
        if (n > 0) a *= a;
    }
    return result;
}
inline Jet3 pow_int(const Jet3& a, long long n) { return thermocurv::pow_int(a, n); }

inline double pow_real(double a, double p) {
    if (!(a > 0.0)) throw DomainError("pow", a);
    return std::exp(p * std::log(a));
}
inline Jet3 pow_real(const Jet3& a, double p) {
    if (!(a.v > 0.0)) throw DomainError("pow", a.v);
    return thermocurv::exp(Jet3::constant(p) * thermocurv::log(a));
}

inline double pow_general(double a, double p) { return pow_real(a, p); }
inline Jet3 pow_general(const Jet3& a, const Jet3& p) { return thermocurv::pow(a, p); }

inline double call(Function fn, double a) {
    switch (fn) {
    case Function::sqrt:
        if (!(a > 0.0)) throw DomainError("sqrt", a);
        return std::sqrt(a);
    case Function::exp: return std::exp(a);
    case Function::ln:
        if (!(a > 0.0)) throw DomainError("ln", a);
        return std::log(a);
    }
    return 0.0;
}
inline Jet3 call(Function fn, const Jet3& a) {
    switch (fn) {
    case Function::sqrt: return thermocurv::sqrt(a);
    case Function::exp: return thermocurv::exp(a);
    case Function::ln: return thermocurv::log(a);
    }
    return a;
}

template <class T>
T make_constant(double v) {
    if constexpr (std::is_same_v<T, Jet3>) return Jet3::constant(v);
    else return v;
}

}  // namespace detail

/// Evaluates `e` with coordinate values `coords` (double or seeded Jet3).
template <class T>
T evaluate(const ExprNode& e, const std::array<T, 2>& coords) {
    return std::visit(
        [&](const auto& n) -> T {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, Constant>) {
                return detail::make_constant<T>(n.value);
            } else if constexpr (std::is_same_v<N, CoordinateRef>) {
                return coords[static_cast<std::size_t>(n.index)];
            } else if constexpr (std::is_same_v<N, ParameterRef>) {
                return detail::make_constant<T>(n.value);
            } else if constexpr (std::is_same_v<N, Negate>) {
                return -evaluate(*n.operand, coords);
            } else if constexpr (std::is_same_v<N, Call>) {
                return detail::call(n.fn, evaluate(*n.arg, coords));
            } else {
                if (n.op == BinaryOp::pow) {
                    const T base = evaluate(*n.lhs, coords);
                    if (n.rhs_constant) {
                        const double p = evaluate<double>(*n.rhs, {0.0, 0.0});
                        if (std::nearbyint(p) == p && std::abs(p) <= 1024.0)
                            return detail::pow_int(base, static_cast<long long>(p));
                        return detail::pow_real(base, p);
                    }
                    return detail::pow_general(base, evaluate(*n.rhs, coords));
                }
                const T a = evaluate(*n.lhs, coords);
                const T b = evaluate(*n.rhs, coords);
                switch (n.op) {
                case BinaryOp::add: return a + b;
                case BinaryOp::sub: return a - b;
                case BinaryOp::mul: return a * b;
                case BinaryOp::div: return detail::divide(a, b);
                case BinaryOp::pow: break;
                }
                return a;
            }
        },
        e.node);
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Fully parenthesised rendering that reparses to an identical tree.
inline std::string to_string(const ExprNode& e, const std::array<std::string, 2>& coords) {
    return std::visit(
        [&](const auto& n) -> std::string {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, Constant>) {
                return format_number(n.value);
            } else if constexpr (std::is_same_v<N, CoordinateRef>) {
                return coords[static_cast<std::size_t>(n.index)];
            } else if constexpr (std::is_same_v<N, ParameterRef>) {
                return n.name;
            } else if constexpr (std::is_same_v<N, Negate>) {
                return "(-" + to_string(*n.operand, coords) + ")";
            } else if constexpr (std::is_same_v<N, Call>) {
                return std::string(function_name(n.fn)) + "(" + to_string(*n.arg, coords) + ")";
            } else {
                static constexpr const char* ops[] = {" + ", " - ", " * ", " / ", "^"};
                return "(" + to_string(*n.lhs, coords) + ops[static_cast<int>(n.op)] + to_string(*n.rhs, coords) +
                       ")";
            }
        },
        e.node);
}

// ---------------------------------------------------------------------------
// Lexer and parser
// ---------------------------------------------------------------------------

namespace detail {

enum class TokenKind { number, identifier, plus, minus, star, slash, caret, lparen, rparen, end };

struct Token {
    TokenKind kind;
    std::size_t pos;
    std::string text;
    double number = 0.0;
};

inline std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < src.size()) {
        const char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
            if (i < src.size() && src[i] == '.') {
                ++i;
                while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
            }
            if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
                if (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
                    while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
                    i = j;
                } else {
                    throw ParseError(ParseErrorKind::lexical, j, "malformed exponent in numeric literal");
                }
            }
            std::string text(src.substr(start, i - start));
            if (text == ".") throw ParseError(ParseErrorKind::lexical, start, "unexpected character '.'");
            errno = 0;
            const double value = std::strtod(text.c_str(), nullptr);
            if (errno == ERANGE && !std::isfinite(value))
                throw ParseError(ParseErrorKind::lexical, start, "numeric literal out of range");
            tokens.push_back({TokenKind::number, start, std::move(text), value});
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
            tokens.push_back({TokenKind::identifier, start, std::string(src.substr(start, i - start))});
            continue;
        }
        TokenKind kind;
        switch (c) {
        case '+': kind = TokenKind::plus; break;
        case '-': kind = TokenKind::minus; break;
        case '*': kind = TokenKind::star; break;
        case '/': kind = TokenKind::slash; break;
        case '^': kind = TokenKind::caret; break;
        case '(': kind = TokenKind::lparen; break;
        case ')': kind = TokenKind::rparen; break;
        default: {
            std::string shown = std::isprint(static_cast<unsigned char>(c))
                                    ? std::string("'") + c + "'"
                                    : "byte 0x" + std::to_string(static_cast<unsigned char>(c));
            throw ParseError(ParseErrorKind::lexical, i, "unexpected character " + shown);
        }
        }
        tokens.push_back({kind, i, std::string(1, c)});
        ++i;
    }
    tokens.push_back({TokenKind::end, src.size(), ""});
    return tokens;
}

class Parser {
public:
    Parser(std::string_view src, const std::array<std::string, 2>& coords, const std::map<std::string, double>& params)
        : tokens_(tokenize(src)), coords_(coords), params_(params) {}

    ExprPtr parse() {
        ExprPtr e = expr();
        if (peek().kind != TokenKind::end) {
            const Token& t = peek();
            throw ParseError(ParseErrorKind::syntax, t.pos, "expected operator or end of input, found '" + t.text + "'");
        }
        return e;
    }

private:
    const Token& peek() const { return tokens_[cursor_]; }
    const Token& advance() { return tokens_[cursor_++]; }

    static ExprPtr node(auto&& n) { return std::make_shared<const ExprNode>(ExprNode{std::forward<decltype(n)>(n)}); }

    ExprPtr expr() {
        ExprPtr lhs = term();
        while (peek().kind == TokenKind::plus || peek().kind == TokenKind::minus) {
            const BinaryOp op = advance().kind == TokenKind::plus ? BinaryOp::add : BinaryOp::sub;
            lhs = node(Binary{op, lhs, term()});
        }
        return lhs;
    }

    ExprPtr term() {
        ExprPtr lhs = unary();
        while (peek().kind == TokenKind::star || peek().kind == TokenKind::slash) {
            const BinaryOp op = advance().kind == TokenKind::star ? BinaryOp::mul : BinaryOp::div;
            lhs = node(Binary{op, lhs, unary()});
        }
        return lhs;
    }

    ExprPtr unary() {
        if (peek().kind == TokenKind::minus) {
            advance();
            return node(Negate{unary()});
        }
        return power();
    }

    ExprPtr power() {
        ExprPtr base = primary();
        if (peek().kind == TokenKind::caret) {
            advance();
            ExprPtr exponent = unary();
            const bool constant = !depends_on_coordinates(*exponent);
            return node(Binary{BinaryOp::pow, base, exponent, constant});
        }
        return base;
    }

    ExprPtr primary() {
        const Token& t = peek();
        switch (t.kind) {
        case TokenKind::number: advance(); return node(Constant{t.number});
        case TokenKind::lparen: {
            advance();
            ExprPtr inner = expr();
            expect_rparen();
            return inner;
        }
        case TokenKind::identifier: {
            advance();
            if (auto fn = function_from_name(t.text)) {
                if (peek().kind != TokenKind::lparen)
                    throw ParseError(ParseErrorKind::syntax, peek().pos, "expected '(' after function " + t.text);
                advance();
                ExprPtr arg = expr();
                expect_rparen();
                return node(Call{*fn, arg});
            }
            for (int i = 0; i < 2; ++i) {
                if (coords_[static_cast<std::size_t>(i)] == t.text) return node(CoordinateRef{i});
            }
            if (auto it = params_.find(t.text); it != params_.end()) return node(ParameterRef{it->first, it->second});
            throw ParseError(ParseErrorKind::unknown_identifier, t.pos, "'" + t.text + "'");
        }
        case TokenKind::end: throw ParseError(ParseErrorKind::syntax, t.pos, "expected expression, found end of input");
        default: throw ParseError(ParseErrorKind::syntax, t.pos, "expected expression, found '" + t.text + "'");
        }
    }

    void expect_rparen() {
        if (peek().kind != TokenKind::rparen) {
            const Token& t = peek();
            throw ParseError(ParseErrorKind::syntax, t.pos,
                             "expected ')', found " + (t.kind == TokenKind::end ? std::string("end of input")
                                                                                 : "'" + t.text + "'"));
        }
        advance();
    }

    std::vector<Token> tokens_;
    std::size_t cursor_ = 0;
    const std::array<std::string, 2>& coords_;
    const std::map<std::string, double>& params_;
};

inline bool is_identifier(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    }
    return true;
}

}  // namespace detail

/// Parses `src` against the given coordinate names and parameter bindings.
inline ExprPtr parse_expression(std::string_view src, const std::array<std::string, 2>& coords,
                                const std::map<std::string, double>& params = {}) {
    return detail::Parser(src, coords, params).parse();
}

// ---------------------------------------------------------------------------
// PotentialSpec
// ---------------------------------------------------------------------------

/// Open interval (lo, hi); infinities mark unbounded ends.
struct Interval {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();

    constexpr bool contains(double v) const { return v > lo && v < hi; }
};

class PotentialSpec {
public:
    PotentialSpec() = default;

    const std::string& name() const { return name_; }
    const std::array<std::string, 2>& coords() const { return coords_; }
    const std::map<std::string, double>& params() const { return params_; }
    const std::string& expression() const { return expression_; }
    const ExprNode& ast() const { return *ast_; }
    const std::array<Interval, 2>& domain() const { return domain_; }

    bool contains(StatePoint p) const { return domain_[0].contains(p.s) && domain_[1].contains(p.x); }

    std::string to_string() const { return thermocurv::to_string(*ast_, coords_); }

    friend PotentialSpec parse_potential(std::string_view, std::array<std::string, 2>, std::map<std::string, double>,
                                         std::string, std::array<Interval, 2>);

private:
    std::string name_;
    std::array<std::string, 2> coords_;
    std::map<std::string, double> params_;
    std::string expression_;
    ExprPtr ast_;
    std::array<Interval, 2> domain_{};
};

inline PotentialSpec parse_potential(std::string_view src, std::array<std::string, 2> coords,
                                     std::map<std::string, double> params = {}, std::string name = {},
                                     std::array<Interval, 2> domain = {}) {
    for (const auto& c : coords) {
        if (!detail::is_identifier(c)) throw ParseError(ParseErrorKind::schema, 0, "invalid coordinate name '" + c + "'");
        if (function_from_name(c)) throw ParseError(ParseErrorKind::schema, 0, "coordinate name '" + c + "' is reserved");
    }
    if (coords[0] == coords[1]) throw ParseError(ParseErrorKind::schema, 0, "coordinates must be distinct");
    for (const auto& [key, value] : params) {
        if (!detail::is_identifier(key) || function_from_name(key))
            throw ParseError(ParseErrorKind::schema, 0, "invalid parameter name '" + key + "'");
        if (key == coords[0] || key == coords[1])
            throw ParseError(ParseErrorKind::schema, 0, "parameter '" + key + "' shadows a coordinate");
        if (!std::isfinite(value)) throw ParseError(ParseErrorKind::schema, 0, "parameter '" + key + "' is not finite");
    }
    for (std::size_t i = 0; i < 2; ++i) {
        if (!(domain[i].lo < domain[i].hi))
            throw ParseError(ParseErrorKind::schema, 0, "empty domain interval for '" + coords[i] + "'");
    }
    if (src.find_first_not_of(" \t\r\n") == std::string_view::npos)
        throw ParseError(ParseErrorKind::syntax, src.size(), "empty expression");

    PotentialSpec spec;
    spec.ast_ = parse_expression(src, coords, params);
    spec.name_ = std::move(name);
    spec.coords_ = std::move(coords);
    spec.params_ = std::move(params);
    spec.expression_ = std::string(src);
    spec.domain_ = domain;
    return spec;
}

namespace detail {
inline void require_in_domain(const PotentialSpec& spec, StatePoint p) {
    for (int i = 0; i < 2; ++i) {
        const Interval& iv = spec.domain()[static_cast<std::size_t>(i)];
        if (!iv.contains(p[i])) {
            throw DomainError(spec.coords()[static_cast<std::size_t>(i)] + " = " + format_number(p[i]) +
                                  " outside the potential's domain",
                              spec.coords()[static_cast<std::size_t>(i)], p[i]);
        }
    }
}
}  // namespace detail

/// Value of the potential at `p`.
inline double eval_scalar(const PotentialSpec& spec, StatePoint p) {
    detail::require_in_domain(spec, p);
    return evaluate<double>(spec.ast(), {p.s, p.x});
}

/// Value and all partials up to third order of the potential at `p`.
inline Jet3 eval_jet(const PotentialSpec& spec, StatePoint p) {
    detail::require_in_domain(spec, p);
    return evaluate<Jet3>(spec.ast(), {Jet3::variable(0, p.s), Jet3::variable(1, p.x)});
}

}  // namespace thermocurv
