#pragma once

// Coefficient expression language.
//
// Grammar (whitespace-insensitive, precedence low to high):
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          right associative
//   primary := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//
// Identifiers: x1..xn, t, z and the functions sqrt exp log abs min max pow.
// `^` binds tighter than unary minus, so -x1^2 == -(x1^2).

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace jdconvex {

namespace detail {
struct Ast;
}

/// Which variables a host field allows. Parse fails with an "not permitted"
/// error if the source references a disabled one.
struct VarPolicy {
    bool allow_x = true;
    bool allow_t = true;
    bool allow_z = true;
};

/// Point of evaluation. x lies in the open positive orthant.
struct EvalEnv {
    std::span<const double> x;
    double t = 0.0;
    std::optional<double> z;
};

/// Value plus first and second derivative along a unit direction.
struct DirDeriv {
    double value = 0.0;
    double d_v = 0.0;
    double d_vv = 0.0;
};

/// Immutable parsed expression. Cheap to copy (shared AST).
class CoeffExpr {
public:
    CoeffExpr() = default;

    std::size_t dimension() const noexcept { return n_; }
    const std::string& source() const noexcept { return source_; }
    bool empty() const noexcept { return ast_ == nullptr; }

    bool uses_t() const noexcept { return uses_t_; }
    bool uses_z() const noexcept { return uses_z_; }
    /// Largest xi index referenced (0 if no x variable appears).
    std::size_t max_x_index() const noexcept { return max_x_; }
    /// True when no variable appears at all.
    bool is_constant() const noexcept { return !uses_t_ && !uses_z_ && max_x_ == 0; }

    /// Fully parenthesized canonical text; parses back to the same tree.
    std::string to_string() const;

    friend CoeffExpr parse(std::string_view source, std::size_t n, VarPolicy policy);
    friend double eval(const CoeffExpr& e, const EvalEnv& env);
    friend DirDeriv dir_derivs(const CoeffExpr& e, const EvalEnv& env,
                               std::span<const double> v);

private:
    std::shared_ptr<const detail::Ast> ast_;
    std::string source_;
    std::size_t n_ = 0;
    std::size_t max_x_ = 0;
    bool uses_t_ = false;
    bool uses_z_ = false;
};

/// Parses `source` as an expression over x1..xn, t, z.
/// Throws ParseError on syntax errors, unknown identifiers, and xi with i > n.
CoeffExpr parse(std::string_view source, std::size_t n, VarPolicy policy = {});

/// Double-precision evaluation. Throws DomainError on sqrt/log of invalid
/// arguments and division by zero.
double eval(const CoeffExpr& e, const EvalEnv& env);

/// Exact value, first and second derivative along `v` (|v| = 1) via
/// second-order truncated Taylor arithmetic. Throws NonDifferentiableError at
/// abs/min/max ties and at sqrt(0).
DirDeriv dir_derivs(const CoeffExpr& e, const EvalEnv& env, std::span<const double> v);

/// Gradient in x built from n coordinate-direction evaluations.
std::vector<double> gradient(const CoeffExpr& e, const EvalEnv& env);

}  // namespace jdconvex
