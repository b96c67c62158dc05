#pragma once

// Jump-diffusion model dX = beta(X,t) dW + int_0^1 phi(X,t,z) (v - q)(dt,dz)
// with Poisson intensity q(dt,dz) = lambda(t) dt dz.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "jdconvex/expr.hpp"

namespace jdconvex {

/// Jump sizes given as a function of the label z, integrated by the
/// composite midpoint rule.
struct DensityJumps {
    std::vector<CoeffExpr> phi;  // n components in (x, t, z)
    std::size_t n_z = 64;
};

struct JumpAtom {
    double weight = 0.0;
    std::vector<CoeffExpr> phi;  // n components in (x, t)
};

/// Finitely many jump sizes. Atom k owns the label interval
/// [w_0 + ... + w_{k-1}, w_0 + ... + w_k).
struct AtomJumps {
    std::vector<JumpAtom> atoms;
};

using JumpField = std::variant<DensityJumps, AtomJumps>;

/// One term of the z-integral: integral_0^1 F(z) dz ~ sum weight * F(z node).
struct JumpNode {
    double weight = 0.0;
    double z = 0.0;  // label used for evaluation (midpoint of the node's interval)
    std::size_t atom = kNoAtom;

    static constexpr std::size_t kNoAtom = std::numeric_limits<std::size_t>::max();
};

class ModelSpec {
public:
    /// `beta` is row-major n x n. Throws ModelError on dimension mismatches,
    /// forbidden variables (z in beta, x in lambda, z in atoms) and atom
    /// weights that are non-positive or do not sum to 1 within 1e-12.
    ModelSpec(std::size_t n, double horizon, std::vector<CoeffExpr> beta, CoeffExpr lambda,
              JumpField jumps, std::string description = {});

    std::size_t dimension() const noexcept { return n_; }
    double horizon() const noexcept { return horizon_; }
    const std::string& description() const noexcept { return description_; }

    const CoeffExpr& beta_expr(std::size_t i, std::size_t j) const { return beta_[i * n_ + j]; }
    const CoeffExpr& lambda_expr() const noexcept { return lambda_; }
    const JumpField& jumps() const noexcept { return jumps_; }
    bool finite_atoms() const noexcept { return std::holds_alternative<AtomJumps>(jumps_); }

    /// Quadrature/atom nodes of the z-integral.
    const std::vector<JumpNode>& jump_nodes() const noexcept { return nodes_; }

    /// Fills `out` (n*n, row-major) with beta(x,t).
    void beta_at(std::span<const double> x, double t, std::span<double> out) const;
    double lambda_at(double t) const;
    /// phi(x,t,z) for the node's label/atom.
    void phi_at(const JumpNode& node, std::span<const double> x, double t,
                std::span<double> out) const;
    /// phi(x,t,z) for an arbitrary label z in [0,1].
    void phi_at(std::span<const double> x, double t, double z, std::span<double> out) const;
    /// Directional derivatives of every phi component at the node.
    void phi_dir_at(const JumpNode& node, std::span<const double> x, double t,
                    std::span<const double> v, std::span<DirDeriv> out) const;
    /// Atom owning label z (AtomJumps only).
    std::size_t atom_for_label(double z) const;

    const CoeffExpr& phi_expr(const JumpNode& node, std::size_t i) const;

private:
    std::size_t n_;
    double horizon_;
    std::vector<CoeffExpr> beta_;
    CoeffExpr lambda_;
    JumpField jumps_;
    std::string description_;
    std::vector<JumpNode> nodes_;
    std::vector<double> cumulative_;  // atom interval right ends
};

/// Axis-aligned box strictly inside the positive orthant.
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    static Box cube(std::size_t n, double lo, double hi) {
        return {std::vector<double>(n, lo), std::vector<double>(n, hi)};
    }
};

enum class Verdict { Pass, Fail, NotCheckable };
const char* to_string(Verdict v);

struct Witness {
    std::vector<double> x;
    double t = 0.0;
    std::optional<double> z;
    std::optional<std::size_t> component;
    double value = 0.0;  // offending quantity (ratio, determinant, 1 + phi_i/x_i, ...)
};

struct AssumptionCheck {
    std::string id;  // "A1".."A7", "lambda"
    Verdict verdict = Verdict::NotCheckable;
    std::string detail;
    std::optional<Witness> witness;
};

/// Sampled check of the standing assumptions. "pass" means no counterexample
/// was found on the sample, not that the assumption is proven.
struct ValidationReport {
    std::vector<AssumptionCheck> checks;
    std::vector<std::string> warnings;
    double growth_constant = 0.0;     // sampled D in (A3)
    double lipschitz_constant = 0.0;  // sampled D in (A4)
    double gamma = 0.0;               // sampled min phi_i / x_i, (A7) needs > -1
    std::size_t n_samples = 0;

    bool ok() const;
    const AssumptionCheck* find(const std::string& id) const;
};

struct ValidationOptions {
    std::size_t n_samples = 256;
    std::uint64_t seed = 1;
    /// Sampled growth/Lipschitz constants above this count as failures.
    double constant_cap = 1e6;
};

ValidationReport validate(const ModelSpec& m, const Box& box, const ValidationOptions& opts = {});

/// Between-jump drift -lambda(t) * int_0^1 phi(x,t,z) dz.
std::vector<double> compensator_drift(const ModelSpec& m, std::span<const double> x, double t);

/// lambda(t) * sqrt(int phi_i^2 dz) / x_i.
double jump_volatility(const ModelSpec& m, std::size_t i, std::span<const double> x, double t);

/// |beta_i.(x,t)| / x_i.
double diffusion_volatility(const ModelSpec& m, std::size_t i, std::span<const double> x, double t);

/// Linear model probe: beta_ij(x,t)/x_i and phi_i(x,t,z)/x_i independent of x
/// on `n_probe` random (x, y, t, z) draws from `box` x [0, horizon].
bool is_linear(const ModelSpec& m, const Box& box, std::uint64_t seed, std::size_t n_probe = 32,
               double tol = 1e-10);

/// Row i of beta proportional to x_i (beta_ij / x_i independent of x).
bool beta_row_proportional(const ModelSpec& m, std::size_t i, const Box& box, std::uint64_t seed,
                           std::size_t n_probe = 32, double tol = 1e-10);

}  // namespace jdconvex
