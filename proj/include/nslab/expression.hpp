#pragma once

/// \file expression.hpp
/// Symbolic scalar expressions over chart coordinates.
///
/// Symbols are x1..xn (base point), v1..vn (velocity fiber), p1..pn
/// (momentum fiber) and y1..ym (hypersurface parameters). Expressions are
/// immutable DAGs with shared nodes; derivatives are exact and are again
/// expressions. Construction folds constants and drops neutral elements
/// (x+0, x*1, x*0, x^1); nothing else is simplified.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nslab {

enum class SymbolKind : std::uint8_t { Base, Velocity, Momentum, Param };

struct Symbol {
    SymbolKind kind;
    int index; ///< zero-based

    std::string name() const;
    friend bool operator==(const Symbol&, const Symbol&) = default;
};

inline Symbol base_sym(int i) { return {SymbolKind::Base, i}; }
inline Symbol vel_sym(int i) { return {SymbolKind::Velocity, i}; }
inline Symbol mom_sym(int i) { return {SymbolKind::Momentum, i}; }
inline Symbol param_sym(int i) { return {SymbolKind::Param, i}; }

/// Numeric values for every symbol kind. Unused kinds may stay empty.
struct Assignment {
    std::span<const double> x;
    std::span<const double> v;
    std::span<const double> p;
    std::span<const double> y;
};

enum class Op : std::uint8_t { Const, Sym, Add, Sub, Mul, Div, Pow, Neg, Sqrt, Exp, Log, Sin, Cos };

struct Node;

class Expr {
public:
    Expr(); ///< the constant 0
    Expr(double c); // NOLINT(google-explicit-constructor): literals read naturally in formulas

    static Expr symbol(Symbol s);

    bool is_constant() const;
    bool is_zero() const;
    double constant_value() const; ///< only valid when is_constant()

    double eval(const Assignment& a) const;
    Expr derivative(Symbol s) const;
    bool depends_on(SymbolKind kind) const;
    std::string str() const;

    const Node* node() const { return node_.get(); }

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);
    friend Expr pow(const Expr& a, const Expr& b);
    friend Expr sqrt(const Expr& a);
    friend Expr exp(const Expr& a);
    friend Expr log(const Expr& a);
    friend Expr sin(const Expr& a);
    friend Expr cos(const Expr& a);

    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

private:
    std::shared_ptr<const Node> node_;
};

struct Node {
    Op op;
    double value = 0.0;
    Symbol sym{SymbolKind::Base, 0};
    Expr a{std::shared_ptr<const Node>{}}; // null for leaves
    Expr b{std::shared_ptr<const Node>{}};
};

Expr differentiate(const Expr& e, Symbol s);

/// Differentiate by symbol name ("x1", "p3", ...). Throws UnknownSymbol.
Expr differentiate(const Expr& e, std::string_view name);

/// Replace each bound symbol by its expression; other symbols are kept.
Expr substitute(const Expr& e, const std::vector<std::pair<Symbol, Expr>>& bindings);

/// Which symbols the parser accepts.
struct SymbolScope {
    int n = 0;            ///< dimension for x, v, p
    int m = 0;            ///< number of y parameters
    bool base = true;     ///< x allowed
    bool velocity = false;
    bool momentum = false;
    bool param = false;

    static SymbolScope over_velocity(int n) { return {n, 0, true, true, false, false}; }
    static SymbolScope over_momentum(int n) { return {n, 0, true, false, true, false}; }
    static SymbolScope over_params(int m) { return {0, m, false, false, false, true}; }
};

/// Parse infix text. Grammar: + - * / ^ (right associative), unary minus,
/// parentheses, numbers, `pi`, sqrt/exp/log/sin/cos calls. Throws ParseError
/// with 1-based line and column.
Expr parse_expression(std::string_view text, const SymbolScope& scope);

/// Parse a symbol name; throws UnknownSymbol if it is not one.
Symbol parse_symbol(std::string_view name);

/// Many expressions compiled into one instruction tape with common
/// subexpressions shared. Evaluation writes one value per expression.
class CompiledBatch {
public:
    CompiledBatch() = default;
    explicit CompiledBatch(std::span<const Expr> exprs);

    std::size_t size() const { return outputs_.size(); }
    void eval(const Assignment& a, std::span<double> out) const;
    std::vector<double> eval(const Assignment& a) const;

private:
    struct Instr {
        Op op;
        std::int32_t lhs;
        std::int32_t rhs;
        double value;
        Symbol sym;
    };
    std::vector<Instr> code_;
    std::vector<std::int32_t> outputs_;
};

} // namespace nslab
