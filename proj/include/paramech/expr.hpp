#pragma once

#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "paramech/para_number.hpp"

namespace paramech {

enum class ExprKind { Constant, Coordinate, Unary, Binary, Powi };
enum class UnaryOp { Neg, Conj, Sqrt, Exp, Log };
enum class BinaryOp { Add, Sub, Mul, Div };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

// Immutable expression tree over named paracomplex coordinates.
// Subtrees are shared freely; nothing mutates a node after construction.
struct ExprNode {
    ExprKind kind;
    ParaNumber value;    // Constant
    std::string name;    // Coordinate
    UnaryOp uop{};       // Unary
    BinaryOp bop{};      // Binary
    int exponent = 0;    // Powi
    ExprPtr left;        // Unary/Powi child, Binary left
    ExprPtr right;       // Binary right
};

ExprPtr make_constant(const ParaNumber& v);
ExprPtr make_constant(double v);
ExprPtr make_coordinate(const std::string& name);
ExprPtr make_unary(UnaryOp op, ExprPtr child);
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr make_powi(ExprPtr base, int exponent);

// Binding of coordinate names to values at one evaluation point.
// Lookups are linear; the sets involved are small.
class EvalEnvironment {
public:
    EvalEnvironment() = default;
    explicit EvalEnvironment(double time) : time(time) {}

    void bind(const std::string& name, const ParaNumber& v);
    const ParaNumber* find(const std::string& name) const;
    const ParaNumber& lookup(const std::string& name) const;
    const std::vector<std::pair<std::string, ParaNumber>>& entries() const { return bindings_; }

    double time = 0.0;

private:
    std::vector<std::pair<std::string, ParaNumber>> bindings_;
};

// Grammar: identifiers [a-zA-Z_][a-zA-Z0-9_]*, real literals, the literal
// `J` for 0+1j, infix + - * / ^ (integer literal exponent only), unary -,
// sqrt( ) exp( ) log( ) conj( ), parentheses. Precedence ^ > unary - > * /
// > + -, left associative. Throws SyntaxError with a 1-based offset.
ExprPtr parse_expression(const std::string& text);

// Canonical printed form; parse(to_string(parse(t))) is structurally
// identical to parse(t).
std::string to_string(const ExprPtr& e);

ParaNumber evaluate(const ExprPtr& e, const EvalEnvironment& env);

// Symbolic partial with respect to a real coordinate x<k>, y<k>, xd<k> or
// yd<k>, under z_k = x_k + j y_k, zb_k = x_k - j y_k (velocities likewise).
ExprPtr diff_real(const ExprPtr& e, const std::string& real_coord);

// Constant folding, 0/1 identities, u - u, double negation.
ExprPtr simplify(const ExprPtr& e);

bool structurally_equal(const ExprPtr& a, const ExprPtr& b);

// Names of all coordinates referenced by the tree, sorted.
std::set<std::string> collect_coordinates(const ExprPtr& e);

bool is_constant_zero(const ExprPtr& e);

// Convenience builders used across the engine.
inline ExprPtr c_add(ExprPtr a, ExprPtr b) { return make_binary(BinaryOp::Add, std::move(a), std::move(b)); }
inline ExprPtr c_sub(ExprPtr a, ExprPtr b) { return make_binary(BinaryOp::Sub, std::move(a), std::move(b)); }
inline ExprPtr c_mul(ExprPtr a, ExprPtr b) { return make_binary(BinaryOp::Mul, std::move(a), std::move(b)); }
inline ExprPtr c_div(ExprPtr a, ExprPtr b) { return make_binary(BinaryOp::Div, std::move(a), std::move(b)); }
inline ExprPtr c_neg(ExprPtr a) { return make_unary(UnaryOp::Neg, std::move(a)); }

} // namespace paramech
