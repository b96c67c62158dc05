#pragma once

// Backward solver for u_t + A u + B u = 0, u(x, T0) = g(x), on log-spaced
// grids in one or two dimensions.
//
//   A u = sum_ij a_ij u_{x_i x_j},  a = beta beta^T / 2
//   B u = lambda(t) int_0^1 (u(x + phi) - u(x) - phi . grad u) dz

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "jdconvex/expr.hpp"
#include "jdconvex/model.hpp"

namespace jdconvex {

/// Tensor grid with nodes uniform in ln x along each axis. Node (i, j) of a
/// 2D grid has flat index i * size(1) + j.
class Grid {
public:
    Grid() = default;
    explicit Grid(std::vector<std::vector<double>> axes);

    /// Uniform in ln x on [lo, hi] per axis.
    static Grid log_uniform(std::span<const double> lo, std::span<const double> hi,
                            std::span<const std::size_t> nodes);
    /// Log-uniform grid with `center` exactly on node nodes/2 of each axis and
    /// ln-spacing 2 * half_width / (nodes - 1).
    static Grid centered(std::span<const double> center, double half_width,
                         std::span<const std::size_t> nodes);

    std::size_t dimension() const noexcept { return axes_.size(); }
    std::size_t size(std::size_t axis) const { return axes_[axis].size(); }
    std::size_t total() const noexcept { return total_; }
    const std::vector<double>& axis(std::size_t a) const { return axes_[a]; }
    double lo(std::size_t a) const { return axes_[a].front(); }
    double hi(std::size_t a) const { return axes_[a].back(); }

    /// Coordinates of flat node k.
    std::vector<double> point(std::size_t k) const;
    std::size_t flat(std::size_t i, std::size_t j = 0) const {
        return dimension() == 1 ? i : i * axes_[1].size() + j;
    }

    /// Multilinear interpolation in x; points outside the box are linearly
    /// extrapolated from the boundary cell.
    double interpolate(std::span<const double> u, std::span<const double> x) const;

private:
    std::vector<std::vector<double>> axes_;
    std::size_t total_ = 0;
};

enum class BoundaryRule {
    Linear,          // u_{x_i x_i} = 0 on the faces normal to axis i, no jump term on faces
    PayoffDirichlet  // faces held at the payoff value
};
const char* to_string(BoundaryRule b);

struct SolveOptions {
    std::size_t n_time_steps = 100;
    BoundaryRule boundary = BoundaryRule::Linear;
    /// Keep every k-th time level (the first and last are always kept).
    std::size_t store_stride = 1;
    /// Fraction of the explicit positivity bound used for the time step. The
    /// bound keeps the diagonal weight of the explicit update non-negative.
    double cfl_safety = 0.9;
    /// Cap on lambda_max * dt.
    double jump_step_cap = 0.5;
    /// In 1D include the explicit half of Crank-Nicolson in the positivity
    /// bound (dt * (a_j c_j / 2 + jump rate) <= cfl_safety). Without it only
    /// the jump rate is capped.
    bool positivity_cap_1d = true;
    std::size_t max_steps = 1000000;
};

struct PideSolution {
    Grid grid;
    std::vector<double> times;          // ascending, times.back() == T0
    std::vector<std::vector<double>> u;  // per stored level
    std::size_t n_steps = 0;
    std::size_t quadrature_nodes = 0;
    BoundaryRule boundary = BoundaryRule::Linear;
    std::string scheme;

    const std::vector<double>& initial() const { return u.front(); }
    /// Interpolated value at `x` on stored level `level` (0 = t_start).
    double value_at(std::span<const double> x, std::size_t level = 0) const {
        return grid.interpolate(u[level], x);
    }
    void write_csv(std::ostream& os) const;
};

struct ConvexityReport {
    double min_value = 0.0;
    std::vector<double> argmin_x;
    double argmin_t = 0.0;
    std::size_t argmin_level = 0;
    std::vector<double> argmin_direction;  // eigenvector of the smallest Hessian eigenvalue
    double tolerance = 0.0;
    bool pass = true;
};

std::vector<double> apply_A(const ModelSpec& m, const Grid& grid, std::span<const double> u, double t);
std::vector<double> apply_B(const ModelSpec& m, const Grid& grid, std::span<const double> u, double t);

/// Throws SolverError when the step caps exceed opts.max_steps.
PideSolution solve(const ModelSpec& m, const CoeffExpr& payoff, const Grid& grid, double t_start,
                   double T0, const SolveOptions& opts = {});

/// Negative tol selects the default 1e-7 * max|u|.
ConvexityReport convexity_report(const PideSolution& sol, double tol = -1.0);

}  // namespace jdconvex
