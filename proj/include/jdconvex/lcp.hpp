#pragma once

// Local convexity-preservation audits. An operator D is LCP at (x, t) if
// d_v^2 (D f)(x, t) >= 0 for every convex f with f_vv(x) = 0. The test
// battery below can find violations; it never proves the property.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jdconvex/expr.hpp"
#include "jdconvex/model.hpp"

namespace jdconvex {

enum class Family {
    Q,  // (w . (y - x0))^2 with w orthogonal to v
    R,  // rho_eps(w . (y - x0) - k), rho'' = clamp(s / eps, 0, 1)
    H   // smoothed hinge: rho'' is a tent on [0, eps], rho' = 1 beyond
};
const char* to_string(Family f);

/// Convex test function anchored at x0. R and H vanish for w . (y - x0) <= k.
struct TestFunction {
    Family family = Family::Q;
    std::vector<double> anchor;
    std::vector<double> w;
    double k = 0.0;
    double eps = 0.0;

    double value(std::span<const double> y) const;
    void gradient(std::span<const double> y, std::span<double> out) const;
    /// Row-major n x n.
    void hessian(std::span<const double> y, std::span<double> out) const;

    /// Scalar profile rho(s) and its first two derivatives.
    double rho(double s) const;
    double rho1(double s) const;
    double rho2(double s) const;

    static TestFunction quadratic(std::vector<double> anchor, std::vector<double> w);
    static TestFunction ridge(std::vector<double> anchor, std::vector<double> w, double k, double eps);
    static TestFunction hinge(std::vector<double> anchor, std::vector<double> w, double k, double eps);
};

/// lambda(t) * int_0^1 [ f_vv(x+phi) + 2 phi_v . grad f_v(x+phi) + phi_v^T Hf(x+phi) phi_v
///                       + phi_vv . (grad f(x+phi) - grad f(x)) ] dz
double d2B(const ModelSpec& m, std::span<const double> x, double t, std::span<const double> v,
           const TestFunction& f);

/// d_v^2 (A f)(x) by a 5-point central difference with h = 1e-3 |x| and one
/// Richardson level; a and Hf are exact.
double d2A(const ModelSpec& m, std::span<const double> x, double t, std::span<const double> v,
           const TestFunction& f);

/// int_0^1 phi_vv . (grad f(x+phi) - grad f(x)) dz.
double cond_value(const ModelSpec& m, std::span<const double> x, double t, std::span<const double> v,
                  const TestFunction& f);
/// Same with f given as an expression in x (gradient by forward differentiation).
double cond_value(const ModelSpec& m, std::span<const double> x, double t, std::span<const double> v,
                  const CoeffExpr& f);

/// int_0^1 (phi_i)_vv phi_i dz, i zero-based.
double bildt_value(const ModelSpec& m, std::span<const double> x, double t, std::size_t i,
                   std::span<const double> v);

enum class LcpOperator { A, B, M, Cond, Bildt };
const char* to_string(LcpOperator op);

/// Parameter lattice of a scan. Cells are visited in the order
/// point, direction, family, w, k, eps (Bildt: point, direction, component).
struct ScanConfig {
    std::vector<std::vector<double>> points;
    std::vector<std::vector<double>> directions;  // unit vectors v
    double t = 0.0;
    std::vector<Family> families{Family::Q, Family::R, Family::H};
    std::vector<double> k_factors{0.05, 0.1, 0.25, 0.5, 1.0};  // times |x|
    std::vector<double> eps_factors{0.01, 0.1};                // times k
    std::size_t n_w = 16;  // battery directions in n >= 2; 1D uses w = +-1
    /// Cond only: an optional convex expression evaluated in addition to the battery.
    std::optional<CoeffExpr> payoff;
    bool keep_cells = false;
};

struct LcpCell {
    std::size_t point_index = 0;
    std::size_t direction_index = 0;
    std::vector<double> x;
    std::vector<double> v;
    std::optional<TestFunction> f;  // empty for Bildt and for the payoff cell of Cond
    bool payoff = false;
    std::size_t component = 0;  // Bildt
    double value = 0.0;
};

struct LcpReport {
    LcpOperator op = LcpOperator::B;
    double t = 0.0;
    std::size_t n_cells = 0;
    std::size_t n_failed = 0;  // cells whose evaluation threw
    std::string first_failure;
    double min_value = 0.0;
    std::optional<LcpCell> certificate;  // cell attaining the minimum
    bool violation = false;
    double tolerance = 0.0;
    std::vector<LcpCell> cells;  // when keep_cells

    const char* verdict() const { return violation ? "violation" : "no-violation-found"; }
};

/// Battery direction set: 16 evenly spaced angles in 2D, +-1 in 1D, fixed
/// quasi-random unit vectors otherwise.
std::vector<std::vector<double>> battery_directions(std::size_t n, std::size_t count);

/// Violation means min < -tol. Default tolerance: 1e-9 for B, cond and bildt,
/// 1e-6 * max(1, scale) for A and M (finite differences).
LcpReport lcp_scan(const ModelSpec& m, LcpOperator op, const ScanConfig& cfg,
                   std::optional<double> tol = std::nullopt);

/// Re-evaluates a single cell, e.g. a certificate.
double evaluate_cell(const ModelSpec& m, LcpOperator op, const LcpCell& cell, double t,
                     const std::optional<CoeffExpr>& payoff = std::nullopt);

enum class VolatilityKind { Jump, Diffusion };
const char* to_string(VolatilityKind k);

struct MonotonicityReport {
    VolatilityKind kind = VolatilityKind::Jump;
    std::size_t component = 0;
    std::vector<double> samples;  // x_i values
    std::vector<double> values;   // volatility at each sample
    std::vector<std::size_t> decreasing_pairs;  // index j flags (j, j+1)
    double tolerance = 1e-9;
    bool pass() const { return decreasing_pairs.empty(); }
};

/// Volatility along axis i (zero-based) with the other coordinates frozen at
/// `base`; flags every adjacent pair decreasing by more than 1e-9.
MonotonicityReport volatility_monotonicity(const ModelSpec& m, std::size_t i, std::span<const double> samples,
                                           std::span<const double> base, double t, VolatilityKind kind);

/// Quasi-random points in a box (for scans).
std::vector<std::vector<double>> scan_points(const Box& box, std::size_t count, std::uint64_t seed);

}  // namespace jdconvex
