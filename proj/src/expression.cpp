#include "nslab/expression.hpp"

#include "nslab/errors.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace nslab {

namespace {

Expr make(Op op, Expr a, Expr b = Expr()) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return Expr(std::shared_ptr<const Node>(std::move(n)));
}

double apply_unary(Op op, double a) {
    switch (op) {
    case Op::Neg: return -a;
    case Op::Sqrt: return std::sqrt(a);
    case Op::Exp: return std::exp(a);
    case Op::Log: return std::log(a);
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    default: return 0.0;
    }
}

double apply_binary(Op op, double a, double b) {
    switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return a / b;
    case Op::Pow: return std::pow(a, b);
    default: return 0.0;
    }
}

bool is_const(const Expr& e, double v) { return e.is_constant() && e.constant_value() == v; }

Expr unary(Op op, const Expr& a) {
    if (a.is_constant()) return Expr(apply_unary(op, a.constant_value()));
    if (op == Op::Neg && a.node()->op == Op::Neg) return a.node()->a;
    return make(op, a);
}

const char* kind_prefix(SymbolKind k) {
    switch (k) {
    case SymbolKind::Base: return "x";
    case SymbolKind::Velocity: return "v";
    case SymbolKind::Momentum: return "p";
    case SymbolKind::Param: return "y";
    }
    return "?";
}

double lookup(const Assignment& a, Symbol s) {
    std::span<const double> src;
    switch (s.kind) {
    case SymbolKind::Base: src = a.x; break;
    case SymbolKind::Velocity: src = a.v; break;
    case SymbolKind::Momentum: src = a.p; break;
    case SymbolKind::Param: src = a.y; break;
    }
    if (s.index < 0 || static_cast<std::size_t>(s.index) >= src.size())
        throw ValidationError("no value bound for symbol " + s.name());
    return src[static_cast<std::size_t>(s.index)];
}

} // namespace

std::string Symbol::name() const { return kind_prefix(kind) + std::to_string(index + 1); }

Expr::Expr() {
    static const std::shared_ptr<const Node> zero = [] {
        auto n = std::make_shared<Node>();
        n->op = Op::Const;
        return n;
    }();
    node_ = zero;
}

Expr::Expr(double c) {
    auto n = std::make_shared<Node>();
    n->op = Op::Const;
    n->value = c;
    node_ = std::move(n);
}

Expr Expr::symbol(Symbol s) {
    auto n = std::make_shared<Node>();
    n->op = Op::Sym;
    n->sym = s;
    return Expr(std::shared_ptr<const Node>(std::move(n)));
}

bool Expr::is_constant() const { return node_->op == Op::Const; }
bool Expr::is_zero() const { return is_const(*this, 0.0); }
double Expr::constant_value() const { return node_->value; }

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr(a.constant_value() + b.constant_value());
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    return make(Op::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr(a.constant_value() - b.constant_value());
    if (b.is_zero()) return a;
    if (a.is_zero()) return -b;
    return make(Op::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr(a.constant_value() * b.constant_value());
    if (a.is_zero() || b.is_zero()) return Expr(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    if (is_const(a, -1.0)) return -b;
    if (is_const(b, -1.0)) return -a;
    return make(Op::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr(a.constant_value() / b.constant_value());
    if (a.is_zero()) return Expr(0.0);
    if (is_const(b, 1.0)) return a;
    return make(Op::Div, a, b);
}

Expr operator-(const Expr& a) { return unary(Op::Neg, a); }

Expr pow(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr(std::pow(a.constant_value(), b.constant_value()));
    if (b.is_zero()) return Expr(1.0);
    if (is_const(b, 1.0)) return a;
    return make(Op::Pow, a, b);
}

Expr sqrt(const Expr& a) { return unary(Op::Sqrt, a); }
Expr exp(const Expr& a) { return unary(Op::Exp, a); }
Expr log(const Expr& a) { return unary(Op::Log, a); }
Expr sin(const Expr& a) { return unary(Op::Sin, a); }
Expr cos(const Expr& a) { return unary(Op::Cos, a); }

double Expr::eval(const Assignment& as) const {
    const Node& n = *node_;
    switch (n.op) {
    case Op::Const: return n.value;
    case Op::Sym: return lookup(as, n.sym);
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Pow: return apply_binary(n.op, n.a.eval(as), n.b.eval(as));
    default: return apply_unary(n.op, n.a.eval(as));
    }
}

bool Expr::depends_on(SymbolKind kind) const {
    const Node& n = *node_;
    switch (n.op) {
    case Op::Const: return false;
    case Op::Sym: return n.sym.kind == kind;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Pow: return n.a.depends_on(kind) || n.b.depends_on(kind);
    default: return n.a.depends_on(kind);
    }
}

std::string Expr::str() const {
    const Node& n = *node_;
    auto fn = [&](const char* name) { return std::string(name) + "(" + n.a.str() + ")"; };
    switch (n.op) {
    case Op::Const: {
        std::ostringstream os;
        os.precision(17);
        os << n.value;
        std::string s = os.str();
        return n.value < 0 ? "(" + s + ")" : s;
    }
    case Op::Sym: return n.sym.name();
    case Op::Add: return "(" + n.a.str() + " + " + n.b.str() + ")";
    case Op::Sub: return "(" + n.a.str() + " - " + n.b.str() + ")";
    case Op::Mul: return "(" + n.a.str() + "*" + n.b.str() + ")";
    case Op::Div: return "(" + n.a.str() + "/" + n.b.str() + ")";
    case Op::Pow: return "(" + n.a.str() + "^" + n.b.str() + ")";
    case Op::Neg: return "(-" + n.a.str() + ")";
    case Op::Sqrt: return fn("sqrt");
    case Op::Exp: return fn("exp");
    case Op::Log: return fn("log");
    case Op::Sin: return fn("sin");
    case Op::Cos: return fn("cos");
    }
    return "?";
}

// ─── differentiation ─────────────────────────────────────────────────────

namespace {

using Memo = std::unordered_map<const Node*, Expr>;

Expr diff(const Expr& e, Symbol s, Memo& memo) {
    const Node* key = e.node();
    if (auto it = memo.find(key); it != memo.end()) return it->second;

    const Node& n = *key;
    Expr d;
    switch (n.op) {
    case Op::Const: d = Expr(0.0); break;
    case Op::Sym: d = Expr(n.sym == s ? 1.0 : 0.0); break;
    case Op::Add: d = diff(n.a, s, memo) + diff(n.b, s, memo); break;
    case Op::Sub: d = diff(n.a, s, memo) - diff(n.b, s, memo); break;
    case Op::Mul: d = diff(n.a, s, memo) * n.b + n.a * diff(n.b, s, memo); break;
    case Op::Div: {
        Expr da = diff(n.a, s, memo);
        Expr db = diff(n.b, s, memo);
        d = da / n.b - n.a * db / (n.b * n.b);
        break;
    }
    case Op::Pow: {
        Expr da = diff(n.a, s, memo);
        if (n.b.is_constant()) {
            double c = n.b.constant_value();
            d = Expr(c) * pow(n.a, Expr(c - 1.0)) * da;
        } else {
            Expr db = diff(n.b, s, memo);
            d = e * (db * log(n.a) + n.b * da / n.a);
        }
        break;
    }
    case Op::Neg: d = -diff(n.a, s, memo); break;
    case Op::Sqrt: d = diff(n.a, s, memo) / (Expr(2.0) * e); break;
    case Op::Exp: d = diff(n.a, s, memo) * e; break;
    case Op::Log: d = diff(n.a, s, memo) / n.a; break;
    case Op::Sin: d = diff(n.a, s, memo) * cos(n.a); break;
    case Op::Cos: d = -(diff(n.a, s, memo) * sin(n.a)); break;
    }
    memo.emplace(key, d);
    return d;
}

Expr rebuild(const Node& n, const Expr& a, const Expr& b) {
    switch (n.op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return a / b;
    case Op::Pow: return pow(a, b);
    default: return unary(n.op, a);
    }
}

Expr subst(const Expr& e, const std::vector<std::pair<Symbol, Expr>>& bindings, Memo& memo) {
    const Node* key = e.node();
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const Node& n = *key;
    Expr r;
    switch (n.op) {
    case Op::Const: r = e; break;
    case Op::Sym: {
        r = e;
        for (const auto& [sym, val] : bindings)
            if (sym == n.sym) r = val;
        break;
    }
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Pow: r = rebuild(n, subst(n.a, bindings, memo), subst(n.b, bindings, memo)); break;
    default: r = rebuild(n, subst(n.a, bindings, memo), Expr()); break;
    }
    memo.emplace(key, r);
    return r;
}

} // namespace

Expr differentiate(const Expr& e, Symbol s) {
    Memo memo;
    return diff(e, s, memo);
}

Expr Expr::derivative(Symbol s) const { return differentiate(*this, s); }

Expr differentiate(const Expr& e, std::string_view name) { return differentiate(e, parse_symbol(name)); }

Expr substitute(const Expr& e, const std::vector<std::pair<Symbol, Expr>>& bindings) {
    Memo memo;
    return subst(e, bindings, memo);
}

Symbol parse_symbol(std::string_view name) {
    if (name.size() < 2) throw UnknownSymbol(std::string(name));
    SymbolKind kind;
    switch (name[0]) {
    case 'x': kind = SymbolKind::Base; break;
    case 'v': kind = SymbolKind::Velocity; break;
    case 'p': kind = SymbolKind::Momentum; break;
    case 'y': kind = SymbolKind::Param; break;
    default: throw UnknownSymbol(std::string(name));
    }
    int idx = 0;
    auto digits = name.substr(1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), idx);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || idx < 1 || digits[0] == '0')
        throw UnknownSymbol(std::string(name));
    return {kind, idx - 1};
}

// ─── parser ──────────────────────────────────────────────────────────────

namespace {

class Parser {
public:
    Parser(std::string_view text, const SymbolScope& scope) : text_(text), scope_(scope) {}

    Expr parse() {
        skip_ws();
        if (at_end()) fail("empty expression");
        Expr e = parse_sum();
        skip_ws();
        if (!at_end()) fail(std::string("unexpected '") + peek() + "'");
        return e;
    }

private:
    std::string_view text_;
    const SymbolScope& scope_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;

    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return at_end() ? '\0' : text_[pos_]; }

    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_ws() {
        while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\n' || peek() == '\r')) advance();
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }

    bool accept(char c) {
        skip_ws();
        if (peek() == c) {
            advance();
            return true;
        }
        return false;
    }

    Expr parse_sum() {
        Expr lhs = parse_product();
        for (;;) {
            if (accept('+')) lhs = lhs + parse_product();
            else if (accept('-')) lhs = lhs - parse_product();
            else return lhs;
        }
    }

    Expr parse_product() {
        Expr lhs = parse_unary();
        for (;;) {
            if (accept('*')) lhs = lhs * parse_unary();
            else if (accept('/')) lhs = lhs / parse_unary();
            else return lhs;
        }
    }

    Expr parse_unary() {
        if (accept('-')) return -parse_unary();
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_primary();
        if (accept('^')) return pow(base, parse_unary());
        return base;
    }

    Expr parse_primary() {
        skip_ws();
        if (at_end()) fail("unexpected end of expression");
        char c = peek();
        if (c == '(') {
            advance();
            Expr e = parse_sum();
            if (!accept(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
        fail(std::string("unexpected '") + c + "'");
    }

    Expr parse_number() {
        std::size_t start = pos_;
        int line = line_, col = col_;
        while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.')) advance();
        if (!at_end() && (peek() == 'e' || peek() == 'E')) {
            std::size_t save = pos_;
            int sl = line_, sc = col_;
            advance();
            if (peek() == '+' || peek() == '-') advance();
            if (std::isdigit(static_cast<unsigned char>(peek()))) {
                while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
            } else {
                pos_ = save;
                line_ = sl;
                col_ = sc;
            }
        }
        std::string_view tok = text_.substr(start, pos_ - start);
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (ec != std::errc() || ptr != tok.data() + tok.size())
            throw ParseError("malformed number '" + std::string(tok) + "'", line, col);
        return Expr(value);
    }

    Expr parse_identifier() {
        std::size_t start = pos_;
        int line = line_, col = col_;
        while (!at_end() && std::isalnum(static_cast<unsigned char>(peek()))) advance();
        std::string_view name = text_.substr(start, pos_ - start);

        using Fn = Expr (*)(const Expr&);
        static const std::map<std::string_view, Fn> functions = {
            {"sqrt", [](const Expr& a) { return sqrt(a); }}, {"exp", [](const Expr& a) { return exp(a); }},
            {"log", [](const Expr& a) { return log(a); }},   {"sin", [](const Expr& a) { return sin(a); }},
            {"cos", [](const Expr& a) { return cos(a); }},
        };
        if (auto it = functions.find(name); it != functions.end()) {
            if (!accept('(')) fail("expected '(' after " + std::string(name));
            Expr arg = parse_sum();
            if (!accept(')')) fail("expected ')'");
            return it->second(arg);
        }
        if (name == "pi") return Expr(std::numbers::pi);

        Symbol sym{};
        try {
            sym = parse_symbol(name);
        } catch (const UnknownSymbol&) {
            throw ParseError("unknown symbol '" + std::string(name) + "'", line, col);
        }
        bool allowed = false;
        int limit = scope_.n;
        switch (sym.kind) {
        case SymbolKind::Base: allowed = scope_.base; break;
        case SymbolKind::Velocity: allowed = scope_.velocity; break;
        case SymbolKind::Momentum: allowed = scope_.momentum; break;
        case SymbolKind::Param:
            allowed = scope_.param;
            limit = scope_.m;
            break;
        }
        if (!allowed || sym.index >= limit)
            throw ParseError("symbol '" + std::string(name) + "' is not available here", line, col);
        return Expr::symbol(sym);
    }
};

} // namespace

Expr parse_expression(std::string_view text, const SymbolScope& scope) { return Parser(text, scope).parse(); }

// ─── compiled batches ────────────────────────────────────────────────────

CompiledBatch::CompiledBatch(std::span<const Expr> exprs) {
    using Key = std::tuple<int, int, int, double, int, int>;
    std::map<Key, std::int32_t> interned;
    std::unordered_map<const Node*, std::int32_t> seen;

    std::function<std::int32_t(const Expr&)> emit = [&](const Expr& e) -> std::int32_t {
        const Node* np = e.node();
        if (auto it = seen.find(np); it != seen.end()) return it->second;
        const Node& n = *np;
        std::int32_t lhs = -1, rhs = -1;
        switch (n.op) {
        case Op::Const:
        case Op::Sym: break;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
        case Op::Pow:
            lhs = emit(n.a);
            rhs = emit(n.b);
            break;
        default: lhs = emit(n.a); break;
        }
        double value = n.op == Op::Const ? n.value : 0.0;
        Key key{static_cast<int>(n.op), lhs, rhs, value, static_cast<int>(n.sym.kind),
                n.op == Op::Sym ? n.sym.index : 0};
        std::int32_t slot;
        if (auto it = interned.find(key); it != interned.end()) {
            slot = it->second;
        } else {
            slot = static_cast<std::int32_t>(code_.size());
            code_.push_back({n.op, lhs, rhs, value, n.sym});
            interned.emplace(key, slot);
        }
        seen.emplace(np, slot);
        return slot;
    };
    outputs_.reserve(exprs.size());
    for (const Expr& e : exprs) outputs_.push_back(emit(e));
}

void CompiledBatch::eval(const Assignment& a, std::span<double> out) const {
    thread_local std::vector<double> slots;
    slots.resize(code_.size());
    for (std::size_t i = 0; i < code_.size(); ++i) {
        const Instr& in = code_[i];
        double r;
        switch (in.op) {
        case Op::Const: r = in.value; break;
        case Op::Sym: r = lookup(a, in.sym); break;
        case Op::Add: r = slots[in.lhs] + slots[in.rhs]; break;
        case Op::Sub: r = slots[in.lhs] - slots[in.rhs]; break;
        case Op::Mul: r = slots[in.lhs] * slots[in.rhs]; break;
        case Op::Div: r = slots[in.lhs] / slots[in.rhs]; break;
        case Op::Pow: r = std::pow(slots[in.lhs], slots[in.rhs]); break;
        default: r = apply_unary(in.op, slots[in.lhs]); break;
        }
        slots[i] = r;
    }
    for (std::size_t k = 0; k < outputs_.size(); ++k) out[k] = slots[outputs_[k]];
}

std::vector<double> CompiledBatch::eval(const Assignment& a) const {
    std::vector<double> out(outputs_.size());
    eval(a, out);
    return out;
}

} // namespace nslab
