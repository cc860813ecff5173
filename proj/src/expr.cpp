#include "paramech/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

namespace paramech {

ExprPtr make_constant(const ParaNumber& v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Constant;
    n->value = v;
    return n;
}

ExprPtr make_constant(double v) { return make_constant(ParaNumber::real(v)); }

ExprPtr make_coordinate(const std::string& name) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Coordinate;
    n->name = name;
    return n;
}

ExprPtr make_unary(UnaryOp op, ExprPtr child) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Unary;
    n->uop = op;
    n->left = std::move(child);
    return n;
}

ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Binary;
    n->bop = op;
    n->left = std::move(lhs);
    n->right = std::move(rhs);
    return n;
}

ExprPtr make_powi(ExprPtr base, int exponent) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Powi;
    n->exponent = exponent;
    n->left = std::move(base);
    return n;
}

void EvalEnvironment::bind(const std::string& name, const ParaNumber& v) {
    for (auto& [k, val] : bindings_) {
        if (k == name) {
            val = v;
            return;
        }
    }
    bindings_.emplace_back(name, v);
}

const ParaNumber* EvalEnvironment::find(const std::string& name) const {
    for (const auto& [k, v] : bindings_) {
        if (k == name) return &v;
    }
    return nullptr;
}

const ParaNumber& EvalEnvironment::lookup(const std::string& name) const {
    if (const ParaNumber* p = find(name)) return *p;
    throw UnboundCoordinateError(name);
}

// ===========================================================================
// Parser
// ===========================================================================

namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
    Tok kind;
    std::string text;
    double number = 0.0;
    bool integral = false; // number token with plain digit spelling
    std::size_t offset = 0; // 1-based position of the first character
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) { advance(); }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        tok_.offset = pos_ + 1;
        if (pos_ >= text_.size()) {
            tok_ = {Tok::End, "", 0.0, false, pos_ + 1};
            return;
        }
        const char c = text_[pos_];
        switch (c) {
            case '+': tok_ = {Tok::Plus, "+", 0.0, false, pos_ + 1}; ++pos_; return;
            case '-': tok_ = {Tok::Minus, "-", 0.0, false, pos_ + 1}; ++pos_; return;
            case '*': tok_ = {Tok::Star, "*", 0.0, false, pos_ + 1}; ++pos_; return;
            case '/': tok_ = {Tok::Slash, "/", 0.0, false, pos_ + 1}; ++pos_; return;
            case '^': tok_ = {Tok::Caret, "^", 0.0, false, pos_ + 1}; ++pos_; return;
            case '(': tok_ = {Tok::LParen, "(", 0.0, false, pos_ + 1}; ++pos_; return;
            case ')': tok_ = {Tok::RParen, ")", 0.0, false, pos_ + 1}; ++pos_; return;
            default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            lex_number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ++pos_;
            }
            tok_ = {Tok::Ident, text_.substr(start, pos_ - start), 0.0, false, start + 1};
            return;
        }
        throw SyntaxError("syntax error at offset " + std::to_string(pos_ + 1) +
                              ": unexpected character '" + std::string(1, c) + "'",
                          pos_ + 1);
    }

    void lex_number() {
        const std::size_t start = pos_;
        bool integral = true;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ < text_.size() && text_[pos_] == '.') {
            integral = false;
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t mark = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                integral = false;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            } else {
                pos_ = mark; // the 'e' belongs to a following identifier
            }
        }
        const std::string text = text_.substr(start, pos_ - start);
        tok_ = {Tok::Number, text, std::strtod(text.c_str(), nullptr), integral, start + 1};
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    Token tok_;
};

[[noreturn]] void fail(const Token& t, const std::string& expected) {
    throw SyntaxError("syntax error at offset " + std::to_string(t.offset) + ": expected " +
                          expected + (t.kind == Tok::End ? ", found end of input"
                                                         : ", found '" + t.text + "'"),
                      t.offset);
}

class Parser {
public:
    explicit Parser(const std::string& text) : lex_(text) {}

    ExprPtr parse() {
        ExprPtr e = parse_sum();
        if (lex_.peek().kind != Tok::End) fail(lex_.peek(), "operator ('+', '-', '*', '/', '^') or end of input");
        return e;
    }

private:
    ExprPtr parse_sum() {
        ExprPtr e = parse_term();
        while (lex_.peek().kind == Tok::Plus || lex_.peek().kind == Tok::Minus) {
            const Tok op = lex_.take().kind;
            ExprPtr rhs = parse_term();
            e = make_binary(op == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub, e, rhs);
        }
        return e;
    }

    ExprPtr parse_term() {
        ExprPtr e = parse_unary();
        while (lex_.peek().kind == Tok::Star || lex_.peek().kind == Tok::Slash) {
            const Tok op = lex_.take().kind;
            ExprPtr rhs = parse_unary();
            e = make_binary(op == Tok::Star ? BinaryOp::Mul : BinaryOp::Div, e, rhs);
        }
        return e;
    }

    ExprPtr parse_unary() {
        if (lex_.peek().kind == Tok::Minus) {
            lex_.take();
            return make_unary(UnaryOp::Neg, parse_unary());
        }
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_primary();
        while (lex_.peek().kind == Tok::Caret) {
            lex_.take();
            int sign = 1;
            if (lex_.peek().kind == Tok::Minus) {
                lex_.take();
                sign = -1;
            } else if (lex_.peek().kind == Tok::Plus) {
                lex_.take();
            }
            const Token t = lex_.peek();
            if (t.kind != Tok::Number || !t.integral) fail(t, "integer literal exponent");
            if (t.number > 1e6) fail(t, "integer literal exponent below 1e6");
            lex_.take();
            base = make_powi(base, sign * static_cast<int>(t.number));
        }
        return base;
    }

    ExprPtr parse_primary() {
        const Token t = lex_.peek();
        switch (t.kind) {
            case Tok::Number:
                lex_.take();
                return make_constant(t.number);
            case Tok::LParen: {
                lex_.take();
                ExprPtr e = parse_sum();
                if (lex_.peek().kind != Tok::RParen) fail(lex_.peek(), "')'");
                lex_.take();
                return e;
            }
            case Tok::Ident: {
                lex_.take();
                if (lex_.peek().kind == Tok::LParen) {
                    UnaryOp op;
                    if (t.text == "sqrt") op = UnaryOp::Sqrt;
                    else if (t.text == "exp") op = UnaryOp::Exp;
                    else if (t.text == "log") op = UnaryOp::Log;
                    else if (t.text == "conj") op = UnaryOp::Conj;
                    else fail(t, "function name (sqrt, exp, log, conj)");
                    lex_.take();
                    ExprPtr arg = parse_sum();
                    if (lex_.peek().kind != Tok::RParen) fail(lex_.peek(), "')'");
                    lex_.take();
                    return make_unary(op, arg);
                }
                if (t.text == "J") return make_constant(ParaNumber::j());
                return make_coordinate(t.text);
            }
            default:
                fail(t, "expression (number, identifier, '(', '-')");
        }
    }

    Lexer lex_;
};

} // namespace

ExprPtr parse_expression(const std::string& text) { return Parser(text).parse(); }

// ===========================================================================
// Printer
// ===========================================================================

namespace {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Effective precedence of a printed node: 1 add/sub, 2 mul/div, 3 unary
// minus, 4 powi, 5 atoms.
int print_precedence(const ExprNode& n) {
    switch (n.kind) {
        case ExprKind::Constant: {
            const ParaNumber& v = n.value;
            if (v.jm() == 0.0) return v.re() < 0.0 ? 3 : 5;
            if (v.re() == 0.0 && v.jm() == 1.0) return 5;
            if (v.re() == 0.0) return v.jm() < 0.0 ? 3 : 2;
            return 5; // printed self-parenthesized
        }
        case ExprKind::Coordinate: return 5;
        case ExprKind::Unary: return n.uop == UnaryOp::Neg ? 3 : 5;
        case ExprKind::Powi: return 4;
        case ExprKind::Binary:
            return (n.bop == BinaryOp::Add || n.bop == BinaryOp::Sub) ? 1 : 2;
    }
    return 5;
}

std::string print_constant(const ParaNumber& v) {
    if (v.jm() == 0.0) return format_double(v.re());
    if (v.re() == 0.0 && v.jm() == 1.0) return "J";
    if (v.re() == 0.0 && v.jm() == -1.0) return "-J";
    if (v.re() == 0.0) return format_double(v.jm()) + "*J";
    std::string s = "(" + format_double(v.re());
    s += v.jm() < 0.0 ? "-" : "+";
    if (std::fabs(v.jm()) == 1.0) s += "J";
    else s += format_double(std::fabs(v.jm())) + "*J";
    return s + ")";
}

void print_node(const ExprPtr& e, int parent_prec, std::string& out) {
    const bool parens = print_precedence(*e) < parent_prec;
    if (parens) out += "(";
    switch (e->kind) {
        case ExprKind::Constant:
            out += print_constant(e->value);
            break;
        case ExprKind::Coordinate:
            out += e->name;
            break;
        case ExprKind::Unary:
            switch (e->uop) {
                case UnaryOp::Neg:
                    out += "-";
                    print_node(e->left, 4, out);
                    break;
                case UnaryOp::Conj: out += "conj("; print_node(e->left, 0, out); out += ")"; break;
                case UnaryOp::Sqrt: out += "sqrt("; print_node(e->left, 0, out); out += ")"; break;
                case UnaryOp::Exp: out += "exp("; print_node(e->left, 0, out); out += ")"; break;
                case UnaryOp::Log: out += "log("; print_node(e->left, 0, out); out += ")"; break;
            }
            break;
        case ExprKind::Powi:
            print_node(e->left, 5, out);
            out += "^" + std::to_string(e->exponent);
            break;
        case ExprKind::Binary: {
            const int prec = print_precedence(*e);
            const char* op = nullptr;
            switch (e->bop) {
                case BinaryOp::Add: op = "+"; break;
                case BinaryOp::Sub: op = "-"; break;
                case BinaryOp::Mul: op = "*"; break;
                case BinaryOp::Div: op = "/"; break;
            }
            print_node(e->left, prec, out);
            out += op;
            print_node(e->right, prec + 1, out);
            break;
        }
    }
    if (parens) out += ")";
}

} // namespace

std::string to_string(const ExprPtr& e) {
    std::string out;
    print_node(e, 0, out);
    return out;
}

// ===========================================================================
// Evaluation
// ===========================================================================

ParaNumber evaluate(const ExprPtr& e, const EvalEnvironment& env) {
    switch (e->kind) {
        case ExprKind::Constant:
            return e->value;
        case ExprKind::Coordinate:
            return env.lookup(e->name);
        case ExprKind::Unary: {
            const ParaNumber v = evaluate(e->left, env);
            try {
                switch (e->uop) {
                    case UnaryOp::Neg: return -v;
                    case UnaryOp::Conj: return conj(v);
                    case UnaryOp::Sqrt: return sqrt(v);
                    case UnaryOp::Exp: return exp(v);
                    case UnaryOp::Log: return log(v);
                }
            } catch (const DomainError& err) {
                throw DomainError(std::string(err.what()) + " in subexpression " + to_string(e));
            }
            return v; // unreachable
        }
        case ExprKind::Powi: {
            const ParaNumber v = evaluate(e->left, env);
            try {
                return powi(v, e->exponent);
            } catch (const ZeroDivisorError& err) {
                throw ZeroDivisorError(std::string(err.what()) + " in subexpression " + to_string(e));
            }
        }
        case ExprKind::Binary: {
            const ParaNumber a = evaluate(e->left, env);
            const ParaNumber b = evaluate(e->right, env);
            switch (e->bop) {
                case BinaryOp::Add: return a + b;
                case BinaryOp::Sub: return a - b;
                case BinaryOp::Mul: return a * b;
                case BinaryOp::Div:
                    try {
                        return para_div(a, b);
                    } catch (const ZeroDivisorError& err) {
                        throw ZeroDivisorError(std::string(err.what()) + " in subexpression " +
                                               to_string(e));
                    }
            }
        }
    }
    throw Error("corrupt expression node");
}

// ===========================================================================
// Real-coordinate differentiation
// ===========================================================================

namespace {

// Splits a reserved coordinate spelling into family and index.
// Families: "z", "zb", "zd", "zdb" and real "x", "y", "xd", "yd".
bool split_family(const std::string& name, std::string& family, int& index) {
    std::size_t i = 0;
    while (i < name.size() && !std::isdigit(static_cast<unsigned char>(name[i]))) ++i;
    if (i == 0 || i == name.size()) return false;
    for (std::size_t k = i; k < name.size(); ++k) {
        if (!std::isdigit(static_cast<unsigned char>(name[k]))) return false;
    }
    family = name.substr(0, i);
    index = std::atoi(name.c_str() + i);
    return true;
}

// Derivative of paracomplex coordinate `family` w.r.t. real family `rf`.
ParaNumber lift_factor(const std::string& pf, const std::string& rf) {
    if (pf == "z") {
        if (rf == "x") return ParaNumber::real(1.0);
        if (rf == "y") return ParaNumber::j();
    } else if (pf == "zb") {
        if (rf == "x") return ParaNumber::real(1.0);
        if (rf == "y") return -ParaNumber::j();
    } else if (pf == "zd") {
        if (rf == "xd") return ParaNumber::real(1.0);
        if (rf == "yd") return ParaNumber::j();
    } else if (pf == "zdb") {
        if (rf == "xd") return ParaNumber::real(1.0);
        if (rf == "yd") return -ParaNumber::j();
    }
    return ParaNumber::real(0.0);
}

ExprPtr zero_expr() { return make_constant(0.0); }

// Zero-pruning builders keep derivative trees free of dead 0-branches.
ExprPtr zadd(ExprPtr a, ExprPtr b) {
    if (is_constant_zero(a)) return b;
    if (is_constant_zero(b)) return a;
    return c_add(std::move(a), std::move(b));
}

ExprPtr zsub(ExprPtr a, ExprPtr b) {
    if (is_constant_zero(b)) return a;
    if (is_constant_zero(a)) return c_neg(std::move(b));
    return c_sub(std::move(a), std::move(b));
}

ExprPtr zmul(ExprPtr a, ExprPtr b) {
    if (is_constant_zero(a) || is_constant_zero(b)) return zero_expr();
    return c_mul(std::move(a), std::move(b));
}

ExprPtr diff_node(const ExprPtr& e, const std::string& rfam, int rindex) {
    switch (e->kind) {
        case ExprKind::Constant:
            return zero_expr();
        case ExprKind::Coordinate: {
            std::string pf;
            int idx = 0;
            if (!split_family(e->name, pf, idx) || idx != rindex) return zero_expr();
            return make_constant(lift_factor(pf, rfam));
        }
        case ExprKind::Unary: {
            ExprPtr du = diff_node(e->left, rfam, rindex);
            if (is_constant_zero(du)) return du;
            switch (e->uop) {
                case UnaryOp::Neg: return c_neg(du);
                case UnaryOp::Conj: return make_unary(UnaryOp::Conj, du);
                case UnaryOp::Sqrt:
                    return c_div(du, c_mul(make_constant(2.0), make_unary(UnaryOp::Sqrt, e->left)));
                case UnaryOp::Exp: return c_mul(make_unary(UnaryOp::Exp, e->left), du);
                case UnaryOp::Log: return c_div(du, e->left);
            }
            return zero_expr();
        }
        case ExprKind::Powi: {
            if (e->exponent == 0) return zero_expr();
            ExprPtr du = diff_node(e->left, rfam, rindex);
            if (is_constant_zero(du)) return du;
            ExprPtr inner = make_powi(e->left, e->exponent - 1);
            return c_mul(c_mul(make_constant(static_cast<double>(e->exponent)), inner), du);
        }
        case ExprKind::Binary: {
            ExprPtr da = diff_node(e->left, rfam, rindex);
            ExprPtr db = diff_node(e->right, rfam, rindex);
            switch (e->bop) {
                case BinaryOp::Add: return zadd(da, db);
                case BinaryOp::Sub: return zsub(da, db);
                case BinaryOp::Mul:
                    return zadd(zmul(da, e->right), zmul(e->left, db));
                case BinaryOp::Div: {
                    if (is_constant_zero(da) && is_constant_zero(db)) return zero_expr();
                    ExprPtr num = zsub(zmul(da, e->right), zmul(e->left, db));
                    if (is_constant_zero(num)) return num;
                    return c_div(num, make_powi(e->right, 2));
                }
            }
        }
    }
    throw Error("corrupt expression node");
}

} // namespace

ExprPtr diff_real(const ExprPtr& e, const std::string& real_coord) {
    std::string rf;
    int idx = 0;
    if (!split_family(real_coord, rf, idx) ||
        (rf != "x" && rf != "y" && rf != "xd" && rf != "yd")) {
        throw Error("not a real coordinate name: " + real_coord);
    }
    return diff_node(e, rf, idx);
}

// ===========================================================================
// Simplification
// ===========================================================================

namespace {

bool is_const(const ExprPtr& e, const ParaNumber& v) {
    return e->kind == ExprKind::Constant && e->value == v;
}

// Collects a tree built from +, -, unary minus and constant factors into
// a linear combination over structurally distinct atoms. This is what
// reduces the Wirtinger half-sum patterns to single coordinates.
struct LinearCollector {
    ParaNumber constant{};
    std::vector<std::pair<ExprPtr, ParaNumber>> terms;

    void add_atom(const ExprPtr& atom, const ParaNumber& coeff) {
        for (auto& [a, c] : terms) {
            if (structurally_equal(a, atom)) {
                c += coeff;
                return;
            }
        }
        terms.emplace_back(atom, coeff);
    }

    void walk(const ExprPtr& e, const ParaNumber& coeff) {
        switch (e->kind) {
            case ExprKind::Constant:
                constant += coeff * e->value;
                return;
            case ExprKind::Unary:
                if (e->uop == UnaryOp::Neg) {
                    walk(e->left, -coeff);
                    return;
                }
                break;
            case ExprKind::Binary:
                switch (e->bop) {
                    case BinaryOp::Add:
                        walk(e->left, coeff);
                        walk(e->right, coeff);
                        return;
                    case BinaryOp::Sub:
                        walk(e->left, coeff);
                        walk(e->right, -coeff);
                        return;
                    case BinaryOp::Mul:
                        if (e->left->kind == ExprKind::Constant) {
                            walk(e->right, coeff * e->left->value);
                            return;
                        }
                        if (e->right->kind == ExprKind::Constant) {
                            walk(e->left, coeff * e->right->value);
                            return;
                        }
                        break;
                    default:
                        break;
                }
                break;
            default:
                break;
        }
        add_atom(e, coeff);
    }

    ExprPtr rebuild() const {
        const ParaNumber zero{0.0, 0.0};
        const ParaNumber one{1.0, 0.0};
        ExprPtr out;
        for (const auto& [atom, coeff] : terms) {
            if (coeff == zero) continue;
            ExprPtr term = coeff == one ? atom : c_mul(make_constant(coeff), atom);
            out = out ? c_add(out, term) : term;
        }
        if (!(constant == zero) || !out) {
            ExprPtr c = make_constant(constant);
            out = out ? c_add(out, c) : c;
        }
        return out;
    }
};

// Rewrites additive trees as linear combinations; returns null when the
// collected form is structurally identical to the input.
ExprPtr collect_linear(const ExprPtr& e) {
    LinearCollector lc;
    lc.walk(e, ParaNumber{1.0, 0.0});
    ExprPtr rebuilt = lc.rebuild();
    if (structurally_equal(rebuilt, e)) return nullptr;
    return rebuilt;
}

ExprPtr simp(const ExprPtr& e) {
    switch (e->kind) {
        case ExprKind::Constant:
        case ExprKind::Coordinate:
            return e;
        case ExprKind::Unary: {
            ExprPtr u = simp(e->left);
            if (e->uop == UnaryOp::Neg && u->kind == ExprKind::Unary && u->uop == UnaryOp::Neg) {
                return u->left;
            }
            if (u->kind == ExprKind::Constant) {
                const ParaNumber v = u->value;
                try {
                    switch (e->uop) {
                        case UnaryOp::Neg: return make_constant(-v);
                        case UnaryOp::Conj: return make_constant(conj(v));
                        case UnaryOp::Sqrt: return make_constant(sqrt(v));
                        case UnaryOp::Exp: return make_constant(exp(v));
                        case UnaryOp::Log: return make_constant(log(v));
                    }
                } catch (const Error&) {
                    // fold only total operations; keep the node otherwise
                }
            }
            return u == e->left ? e : make_unary(e->uop, u);
        }
        case ExprKind::Powi: {
            ExprPtr u = simp(e->left);
            if (e->exponent == 0) return make_constant(1.0);
            if (e->exponent == 1) return u;
            if (u->kind == ExprKind::Constant) {
                try {
                    return make_constant(powi(u->value, e->exponent));
                } catch (const Error&) {
                }
            }
            return u == e->left ? e : make_powi(u, e->exponent);
        }
        case ExprKind::Binary: {
            ExprPtr a = simp(e->left);
            ExprPtr b = simp(e->right);
            const ParaNumber zero{0.0, 0.0};
            const ParaNumber one{1.0, 0.0};
            switch (e->bop) {
                case BinaryOp::Add:
                    if (is_const(a, zero)) return b;
                    if (is_const(b, zero)) return a;
                    break;
                case BinaryOp::Sub:
                    if (is_const(b, zero)) return a;
                    if (structurally_equal(a, b)) return make_constant(0.0);
                    if (is_const(a, zero)) return simp(c_neg(b));
                    break;
                case BinaryOp::Mul: {
                    if (is_const(a, zero) || is_const(b, zero)) return make_constant(0.0);
                    if (is_const(a, one)) return b;
                    if (is_const(b, one)) return a;
                    // Canonicalize constant factors to a single left slot.
                    auto split_const = [](const ExprPtr& n) -> std::pair<ParaNumber, ExprPtr> {
                        if (n->kind == ExprKind::Constant) return {n->value, nullptr};
                        if (n->kind == ExprKind::Binary && n->bop == BinaryOp::Mul &&
                            n->left->kind == ExprKind::Constant) {
                            return {n->left->value, n->right};
                        }
                        return {{1.0, 0.0}, n};
                    };
                    const bool a_cm = a->kind == ExprKind::Binary && a->bop == BinaryOp::Mul &&
                                      a->left->kind == ExprKind::Constant;
                    const bool b_cm = b->kind == ExprKind::Binary && b->bop == BinaryOp::Mul &&
                                      b->left->kind == ExprKind::Constant;
                    if (a_cm || b_cm || b->kind == ExprKind::Constant) {
                        const auto [ca, xa] = split_const(a);
                        const auto [cb, xb] = split_const(b);
                        const ParaNumber coeff = ca * cb;
                        if (coeff == zero) return make_constant(0.0);
                        ExprPtr core = (xa && xb) ? c_mul(xa, xb) : (xa ? xa : xb);
                        if (!core) return make_constant(coeff);
                        if (coeff == one) return core;
                        return c_mul(make_constant(coeff), core);
                    }
                    break;
                }
                case BinaryOp::Div:
                    if (is_const(b, one)) return a;
                    if (b->kind == ExprKind::Constant && a->kind != ExprKind::Constant &&
                        !is_zero_divisor(b->value)) {
                        return simp(c_mul(make_constant(para_div(ParaNumber{1.0, 0.0}, b->value)), a));
                    }
                    break;
            }
            if (a->kind == ExprKind::Constant && b->kind == ExprKind::Constant) {
                try {
                    switch (e->bop) {
                        case BinaryOp::Add: return make_constant(a->value + b->value);
                        case BinaryOp::Sub: return make_constant(a->value - b->value);
                        case BinaryOp::Mul: return make_constant(a->value * b->value);
                        case BinaryOp::Div: return make_constant(para_div(a->value, b->value));
                    }
                } catch (const Error&) {
                }
            }
            ExprPtr node = (a == e->left && b == e->right) ? e : make_binary(e->bop, a, b);
            if (e->bop == BinaryOp::Add || e->bop == BinaryOp::Sub) {
                if (ExprPtr collected = collect_linear(node)) return collected;
            }
            return node;
        }
    }
    return e;
}

} // namespace

ExprPtr simplify(const ExprPtr& e) { return simp(e); }

bool structurally_equal(const ExprPtr& a, const ExprPtr& b) {
    if (a == b) return true;
    if (!a || !b || a->kind != b->kind) return false;
    switch (a->kind) {
        case ExprKind::Constant: return a->value == b->value;
        case ExprKind::Coordinate: return a->name == b->name;
        case ExprKind::Unary:
            return a->uop == b->uop && structurally_equal(a->left, b->left);
        case ExprKind::Powi:
            return a->exponent == b->exponent && structurally_equal(a->left, b->left);
        case ExprKind::Binary:
            return a->bop == b->bop && structurally_equal(a->left, b->left) &&
                   structurally_equal(a->right, b->right);
    }
    return false;
}

namespace {

void collect(const ExprPtr& e, std::set<std::string>& out) {
    switch (e->kind) {
        case ExprKind::Constant: return;
        case ExprKind::Coordinate:
            out.insert(e->name);
            return;
        case ExprKind::Unary:
        case ExprKind::Powi:
            collect(e->left, out);
            return;
        case ExprKind::Binary:
            collect(e->left, out);
            collect(e->right, out);
            return;
    }
}

} // namespace

std::set<std::string> collect_coordinates(const ExprPtr& e) {
    std::set<std::string> out;
    collect(e, out);
    return out;
}

bool is_constant_zero(const ExprPtr& e) {
    return e->kind == ExprKind::Constant && e->value == ParaNumber{0.0, 0.0};
}

} // namespace paramech
