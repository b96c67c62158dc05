#include "jdconvex/pide.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "jdconvex/errors.hpp"

namespace jdconvex {

namespace {

// Three-point stencils on a non-uniform axis at interior node j.
struct Stencil {
    double second_m, second_0, second_p;  // u_xx ~ m*u[j-1] - 0*u[j] + p*u[j+1]
    double first_m, first_0, first_p;     // exact for quadratics
};

Stencil stencil(const std::vector<double>& x, std::size_t j) {
    double hm = x[j] - x[j - 1];
    double hp = x[j + 1] - x[j];
    double s = hm + hp;
    return {2.0 / (hm * s), 2.0 / (hm * hp), 2.0 / (hp * s),
            -hp / (hm * s), (hp - hm) / (hm * hp), hm / (hp * s)};
}

bool interior(const std::vector<double>& axis, std::size_t j) { return j > 0 && j + 1 < axis.size(); }

// a = beta beta^T / 2 at every node; 1D uses only a11.
struct DiffusionField {
    std::vector<double> a11, a12, a22;
};

DiffusionField diffusion_field(const ModelSpec& m, const Grid& g, double t) {
    const std::size_t n = m.dimension();
    DiffusionField f;
    f.a11.resize(g.total());
    if (n == 2) {
        f.a12.resize(g.total());
        f.a22.resize(g.total());
    }
    std::vector<double> beta(n * n);
    for (std::size_t k = 0; k < g.total(); ++k) {
        auto x = g.point(k);
        m.beta_at(x, t, beta);
        if (n == 1) {
            f.a11[k] = 0.5 * beta[0] * beta[0];
        } else {
            f.a11[k] = 0.5 * (beta[0] * beta[0] + beta[1] * beta[1]);
            f.a12[k] = 0.5 * (beta[0] * beta[2] + beta[1] * beta[3]);
            f.a22[k] = 0.5 * (beta[2] * beta[2] + beta[3] * beta[3]);
        }
    }
    return f;
}

std::vector<double> apply_diffusion(const Grid& g, const DiffusionField& a, std::span<const double> u) {
    std::vector<double> out(g.total(), 0.0);
    const auto& x0 = g.axis(0);
    if (g.dimension() == 1) {
        for (std::size_t j = 1; j + 1 < x0.size(); ++j) {
            auto s = stencil(x0, j);
            out[j] = a.a11[j] * (s.second_m * u[j - 1] - s.second_0 * u[j] + s.second_p * u[j + 1]);
        }
        return out;
    }
    const auto& x1 = g.axis(1);
    const std::size_t n1 = x1.size();
    for (std::size_t i = 0; i < x0.size(); ++i) {
        for (std::size_t j = 0; j < n1; ++j) {
            std::size_t k = i * n1 + j;
            double acc = 0.0;
            bool in0 = interior(x0, i), in1 = interior(x1, j);
            if (in0) {
                auto s = stencil(x0, i);
                acc += a.a11[k] * (s.second_m * u[k - n1] - s.second_0 * u[k] + s.second_p * u[k + n1]);
            }
            if (in1) {
                auto s = stencil(x1, j);
                acc += a.a22[k] * (s.second_m * u[k - 1] - s.second_0 * u[k] + s.second_p * u[k + 1]);
            }
            if (a.a12[k] != 0.0) {
                // Cross stencil, one-sided across a face.
                std::size_t ip = std::min(i + 1, x0.size() - 1), im = i > 0 ? i - 1 : 0;
                std::size_t jp = std::min(j + 1, n1 - 1), jm = j > 0 ? j - 1 : 0;
                double cross = (u[ip * n1 + jp] - u[ip * n1 + jm] - u[im * n1 + jp] + u[im * n1 + jm]) /
                               ((x0[ip] - x0[im]) * (x1[jp] - x1[jm]));
                acc += 2.0 * a.a12[k] * cross;
            }
            out[k] = acc;
        }
    }
    return out;
}

// Partial derivative along `axis` at every node: quadratic-exact three-point
// formula inside, one-sided on the faces. `mode` (optional, per node) selects
// a backward (-1) or forward (+1) difference instead of the central one.
std::vector<double> partial(const Grid& g, std::span<const double> u, std::size_t axis,
                            const std::vector<signed char>* mode = nullptr) {
    std::vector<double> out(g.total());
    const auto& x = g.axis(axis);
    const std::size_t stride = g.dimension() == 2 && axis == 0 ? g.size(1) : 1;
    for (std::size_t k = 0; k < g.total(); ++k) {
        std::size_t j = g.dimension() == 1 ? k : axis == 0 ? k / g.size(1) : k % g.size(1);
        signed char md = mode ? (*mode)[k] : 0;
        if (j == 0 || (md > 0 && j + 1 < x.size())) {
            out[k] = (u[k + stride] - u[k]) / (x[j + 1] - x[j]);
        } else if (j + 1 == x.size() || md < 0) {
            out[k] = (u[k] - u[k - stride]) / (x[j] - x[j - 1]);
        } else {
            auto s = stencil(x, j);
            out[k] = s.first_m * u[k - stride] + s.first_0 * u[k] + s.first_p * u[k + stride];
        }
    }
    return out;
}

// Jump targets x + phi(x, t, z_q) for every node and every z-node q.
struct JumpTargets {
    std::size_t n_nodes = 0;
    std::vector<double> weight;  // per q
    std::vector<double> phi;     // [k][q][i]
    std::vector<double> mean;    // [k][i], sum_q weight_q phi
};

JumpTargets jump_targets(const ModelSpec& m, const Grid& g, double t) {
    const std::size_t n = m.dimension();
    const auto& nodes = m.jump_nodes();
    JumpTargets jt;
    jt.n_nodes = nodes.size();
    for (const auto& q : nodes) jt.weight.push_back(q.weight);
    jt.phi.resize(g.total() * nodes.size() * n);
    jt.mean.assign(g.total() * n, 0.0);
    std::vector<double> phi(n);
    for (std::size_t k = 0; k < g.total(); ++k) {
        auto x = g.point(k);
        for (std::size_t q = 0; q < nodes.size(); ++q) {
            m.phi_at(nodes[q], x, t, phi);
            for (std::size_t i = 0; i < n; ++i) jt.mean[k * n + i] += nodes[q].weight * phi[i];
            std::copy(phi.begin(), phi.end(), jt.phi.begin() + static_cast<std::ptrdiff_t>((k * nodes.size() + q) * n));
        }
    }
    return jt;
}

using TransportModes = std::vector<std::vector<signed char>>;  // per axis, per node

std::vector<double> apply_jumps(const Grid& g, const JumpTargets& jt, double lam, std::span<const double> u,
                                const TransportModes* modes = nullptr) {
    std::vector<double> out(g.total(), 0.0);
    if (lam == 0.0) return out;
    const std::size_t n = g.dimension();
    std::vector<std::vector<double>> grad;
    for (std::size_t a = 0; a < n; ++a) grad.push_back(partial(g, u, a, modes ? &(*modes)[a] : nullptr));
    std::vector<double> target(n);
    for (std::size_t k = 0; k < g.total(); ++k) {
        auto x = g.point(k);
        double acc = 0.0;
        for (std::size_t q = 0; q < jt.n_nodes; ++q) {
            const double* phi = jt.phi.data() + (k * jt.n_nodes + q) * n;
            double transport = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                target[i] = x[i] + phi[i];
                transport += phi[i] * grad[i][k];
            }
            acc += jt.weight[q] * (g.interpolate(u, target) - u[k] - transport);
        }
        out[k] = lam * acc;
    }
    return out;
}

bool phi_depends_on_t(const ModelSpec& m) {
    for (const auto& q : m.jump_nodes())
        for (std::size_t i = 0; i < m.dimension(); ++i)
            if (m.phi_expr(q, i).uses_t()) return true;
    return false;
}

bool beta_depends_on_t(const ModelSpec& m) {
    for (std::size_t i = 0; i < m.dimension(); ++i)
        for (std::size_t j = 0; j < m.dimension(); ++j)
            if (m.beta_expr(i, j).uses_t()) return true;
    return false;
}

bool on_face(const Grid& g, std::size_t k) {
    if (g.dimension() == 1) return k == 0 || k + 1 == g.total();
    std::size_t i = k / g.size(1), j = k % g.size(1);
    return !interior(g.axis(0), i) || !interior(g.axis(1), j);
}

// Thomas algorithm; all arrays of length N, lower[0] and upper[N-1] unused.
void solve_tridiagonal(std::vector<double>& lower, std::vector<double>& diag, std::vector<double>& upper,
                       std::vector<double>& rhs) {
    const std::size_t N = diag.size();
    for (std::size_t j = 1; j < N; ++j) {
        double w = lower[j] / diag[j - 1];
        diag[j] -= w * upper[j - 1];
        rhs[j] -= w * rhs[j - 1];
    }
    rhs[N - 1] /= diag[N - 1];
    for (std::size_t j = N - 1; j-- > 0;) rhs[j] = (rhs[j] - upper[j] * rhs[j + 1]) / diag[j];
}

const std::vector<double>& axis_coeff(const DiffusionField& a, std::size_t axis) { return axis == 0 ? a.a11 : a.a22; }

std::size_t axis_index(const Grid& g, std::size_t k, std::size_t axis) {
    return g.dimension() == 1 ? k : axis == 0 ? k / g.size(1) : k % g.size(1);
}

// Difference used for the compensator transport -b . grad u with
// b = lambda int phi dz: central where the neighbouring diffusion weight
// (times `share`, the explicit fraction) dominates, upwind otherwise. Keeps
// every off-diagonal weight of the explicit update non-negative.
TransportModes transport_modes(const Grid& g, const DiffusionField& a, const JumpTargets& jt, double lam,
                               double share) {
    const std::size_t n = g.dimension();
    TransportModes modes(n, std::vector<signed char>(g.total(), 0));
    if (lam == 0.0) return modes;
    for (std::size_t ax = 0; ax < n; ++ax) {
        const auto& x = g.axis(ax);
        const auto& aa = axis_coeff(a, ax);
        for (std::size_t k = 0; k < g.total(); ++k) {
            std::size_t j = axis_index(g, k, ax);
            if (!interior(x, j)) continue;
            double b = lam * jt.mean[k * n + ax];
            auto s = stencil(x, j);
            bool central = share * aa[k] * s.second_m >= std::abs(b * s.first_m) &&
                           share * aa[k] * s.second_p >= std::abs(b * s.first_p);
            if (!central) modes[ax][k] = b > 0.0 ? -1 : 1;
        }
    }
    return modes;
}

// Largest diagonal rate of the explicit update: share * sum_i a_ii c0_i plus
// lambda * sum_q w_q (1 + sum_i |phi_i| / h_i).
double explicit_rate(const Grid& g, const DiffusionField& a, const JumpTargets& jt, double lam, double share) {
    const std::size_t n = g.dimension();
    double worst = 0.0;
    for (std::size_t k = 0; k < g.total(); ++k) {
        double v = 0.0;
        double inv_h[2] = {0.0, 0.0};
        for (std::size_t ax = 0; ax < n; ++ax) {
            const auto& x = g.axis(ax);
            std::size_t j = axis_index(g, k, ax);
            if (interior(x, j)) {
                v += share * axis_coeff(a, ax)[k] * stencil(x, j).second_0;
                inv_h[ax] = 1.0 / std::min(x[j] - x[j - 1], x[j + 1] - x[j]);
            } else {
                inv_h[ax] = 1.0 / (j == 0 ? x[1] - x[0] : x[j] - x[j - 1]);
            }
        }
        if (lam > 0.0) {
            double jump = 0.0;
            for (std::size_t q = 0; q < jt.n_nodes; ++q) {
                const double* phi = jt.phi.data() + (k * jt.n_nodes + q) * n;
                double r = 1.0;
                for (std::size_t ax = 0; ax < n; ++ax) r += std::abs(phi[ax]) * inv_h[ax];
                jump += jt.weight[q] * r;
            }
            v += lam * jump;
        }
        worst = std::max(worst, v);
    }
    return worst;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(std::vector<std::vector<double>> axes) : axes_(std::move(axes)) {
    if (axes_.empty() || axes_.size() > 2) throw Error("grids support one or two dimensions");
    total_ = 1;
    for (const auto& ax : axes_) {
        if (ax.size() < 3) throw Error("each grid axis needs at least 3 nodes");
        if (!(ax.front() > 0.0)) throw Error("grid must lie in the positive orthant");
        for (std::size_t j = 1; j < ax.size(); ++j)
            if (!(ax[j] > ax[j - 1])) throw Error("grid nodes must be strictly increasing");
        total_ *= ax.size();
    }
}

Grid Grid::log_uniform(std::span<const double> lo, std::span<const double> hi, std::span<const std::size_t> nodes) {
    std::vector<std::vector<double>> axes;
    for (std::size_t a = 0; a < lo.size(); ++a) {
        if (!(lo[a] > 0.0 && hi[a] > lo[a])) throw Error("grid bounds must satisfy 0 < lo < hi");
        std::vector<double> ax(nodes[a]);
        double ylo = std::log(lo[a]), yhi = std::log(hi[a]);
        for (std::size_t j = 0; j < ax.size(); ++j)
            ax[j] = std::exp(ylo + (yhi - ylo) * static_cast<double>(j) / static_cast<double>(ax.size() - 1));
        ax.front() = lo[a];
        ax.back() = hi[a];
        axes.push_back(std::move(ax));
    }
    return Grid(std::move(axes));
}

Grid Grid::centered(std::span<const double> center, double half_width, std::span<const std::size_t> nodes) {
    std::vector<std::vector<double>> axes;
    for (std::size_t a = 0; a < center.size(); ++a) {
        if (!(center[a] > 0.0)) throw Error("grid center must be positive");
        if (nodes[a] < 3) throw Error("each grid axis needs at least 3 nodes");
        std::vector<double> ax(nodes[a]);
        double dy = 2.0 * half_width / static_cast<double>(nodes[a] - 1);
        auto mid = static_cast<long>(nodes[a] / 2);
        double yc = std::log(center[a]);
        for (std::size_t j = 0; j < ax.size(); ++j)
            ax[j] = std::exp(yc + dy * static_cast<double>(static_cast<long>(j) - mid));
        ax[static_cast<std::size_t>(mid)] = center[a];
        axes.push_back(std::move(ax));
    }
    return Grid(std::move(axes));
}

std::vector<double> Grid::point(std::size_t k) const {
    if (dimension() == 1) return {axes_[0][k]};
    return {axes_[0][k / axes_[1].size()], axes_[1][k % axes_[1].size()]};
}

double Grid::interpolate(std::span<const double> u, std::span<const double> x) const {
    std::size_t cell[2] = {0, 0};
    double theta[2] = {0.0, 0.0};
    for (std::size_t a = 0; a < dimension(); ++a) {
        const auto& ax = axes_[a];
        auto it = std::upper_bound(ax.begin(), ax.end(), x[a]);
        std::size_t c = it == ax.begin() ? 0 : static_cast<std::size_t>(it - ax.begin()) - 1;
        c = std::min(c, ax.size() - 2);
        cell[a] = c;
        theta[a] = (x[a] - ax[c]) / (ax[c + 1] - ax[c]);
    }
    if (dimension() == 1) return (1.0 - theta[0]) * u[cell[0]] + theta[0] * u[cell[0] + 1];
    const std::size_t n1 = axes_[1].size();
    std::size_t k = cell[0] * n1 + cell[1];
    double t0 = theta[0], t1 = theta[1];
    return (1.0 - t0) * ((1.0 - t1) * u[k] + t1 * u[k + 1]) + t0 * ((1.0 - t1) * u[k + n1] + t1 * u[k + n1 + 1]);
}

const char* to_string(BoundaryRule b) {
    return b == BoundaryRule::Linear ? "linear" : "payoff-dirichlet";
}

// ---------------------------------------------------------------------------

std::vector<double> apply_A(const ModelSpec& m, const Grid& grid, std::span<const double> u, double t) {
    if (m.dimension() != grid.dimension()) throw Error("grid and model dimensions differ");
    return apply_diffusion(grid, diffusion_field(m, grid, t), u);
}

std::vector<double> apply_B(const ModelSpec& m, const Grid& grid, std::span<const double> u, double t) {
    if (m.dimension() != grid.dimension()) throw Error("grid and model dimensions differ");
    return apply_jumps(grid, jump_targets(m, grid, t), m.lambda_at(t), u);
}

PideSolution solve(const ModelSpec& m, const CoeffExpr& payoff, const Grid& grid, double t_start, double T0,
                   const SolveOptions& opts) {
    const std::size_t n = m.dimension();
    if (n != grid.dimension()) throw Error("grid and model dimensions differ");
    if (!(t_start <= T0) || t_start < 0.0 || T0 > m.horizon() + 1e-12) throw Error("need 0 <= t_start <= T0 <= T");
    if (payoff.max_x_index() > n) throw Error("payoff references a coordinate beyond the model dimension");

    PideSolution sol;
    sol.grid = grid;
    sol.boundary = opts.boundary;
    sol.quadrature_nodes = m.jump_nodes().size();
    sol.scheme = n == 1 ? "crank-nicolson diffusion, explicit jumps" : "explicit diffusion, explicit jumps";

    std::vector<double> u(grid.total());
    for (std::size_t k = 0; k < grid.total(); ++k) {
        auto x = grid.point(k);
        u[k] = eval(payoff, EvalEnv{x, T0, std::nullopt});
    }
    const std::vector<double> g = u;
    const double tau = T0 - t_start;

    // Step-size caps: lambda_max * dt <= jump_step_cap, and dt * rate <= cfl_safety
    // where rate bounds the diagonal of the explicit update.
    const double share = n == 2 ? 1.0 : opts.positivity_cap_1d ? 0.5 : 0.0;
    const bool beta_t = beta_depends_on_t(m);
    const bool phi_t = phi_depends_on_t(m);
    DiffusionField a_old = diffusion_field(m, grid, T0);
    JumpTargets jt = jump_targets(m, grid, T0);
    double lam_max = 0.0;
    for (std::size_t s = 0; s <= 64; ++s) lam_max = std::max(lam_max, m.lambda_at(t_start + tau * static_cast<double>(s) / 64.0));
    double rate = explicit_rate(grid, a_old, jt, lam_max, share);
    if (beta_t || phi_t)
        for (std::size_t s = 0; s < 16; ++s) {
            double ts = t_start + tau * static_cast<double>(s) / 16.0;
            rate = std::max(rate, explicit_rate(grid, beta_t ? diffusion_field(m, grid, ts) : a_old,
                                                phi_t ? jump_targets(m, grid, ts) : jt, lam_max, share));
        }

    std::size_t steps = std::max<std::size_t>(1, opts.n_time_steps);
    auto require_steps = [&](double dt_cap) {
        if (dt_cap <= 0.0 || tau <= 0.0) return;
        double need = std::ceil(tau / dt_cap);
        if (need > static_cast<double>(opts.max_steps))
            throw SolverError("time-step cap requires " + std::to_string(need) + " steps, above the limit of " +
                              std::to_string(opts.max_steps));
        steps = std::max(steps, static_cast<std::size_t>(need));
    };
    if (lam_max > 0.0) require_steps(opts.jump_step_cap / lam_max);
    if (rate > 0.0) require_steps(opts.cfl_safety / rate);
    if (tau <= 0.0) steps = 0;
    sol.n_steps = steps;

    const double dt = steps > 0 ? tau / static_cast<double>(steps) : 0.0;

    // Levels are produced backwards from T0 and reversed at the end.
    std::vector<double> times{T0};
    std::vector<std::vector<double>> levels{u};
    const std::size_t N = grid.total();
    std::vector<double> lower(N), diag(N), upper(N), rhs(N);

    for (std::size_t step = 0; step < steps; ++step) {
        double t_old = T0 - static_cast<double>(step) * dt;
        double t_new = step + 1 == steps ? t_start : T0 - static_cast<double>(step + 1) * dt;
        if (phi_t && step > 0) jt = jump_targets(m, grid, t_old);
        double lam = m.lambda_at(t_old);
        auto modes = transport_modes(grid, a_old, jt, lam, n == 2 ? 1.0 : 0.5);
        auto jump = apply_jumps(grid, jt, lam, u, &modes);
        auto diff_old = apply_diffusion(grid, a_old, u);
        DiffusionField a_new = beta_t ? diffusion_field(m, grid, t_new) : a_old;

        if (n == 1) {
            const auto& x = grid.axis(0);
            for (std::size_t j = 0; j < N; ++j) {
                if (j == 0 || j + 1 == N) {
                    lower[j] = upper[j] = 0.0;
                    diag[j] = 1.0;
                    rhs[j] = opts.boundary == BoundaryRule::PayoffDirichlet ? g[j] : u[j];
                    continue;
                }
                auto s = stencil(x, j);
                double c = 0.5 * dt * a_new.a11[j];
                lower[j] = -c * s.second_m;
                diag[j] = 1.0 + c * s.second_0;
                upper[j] = -c * s.second_p;
                rhs[j] = u[j] + 0.5 * dt * diff_old[j] + dt * jump[j];
            }
            solve_tridiagonal(lower, diag, upper, rhs);
            u.swap(rhs);
        } else {
            for (std::size_t k = 0; k < N; ++k) {
                if (!on_face(grid, k))
                    u[k] += dt * (diff_old[k] + jump[k]);
                else if (opts.boundary == BoundaryRule::PayoffDirichlet)
                    u[k] = g[k];
                else
                    u[k] += dt * diff_old[k];
            }
        }
        a_old = std::move(a_new);
        for (double v : u)
            if (!std::isfinite(v)) throw SolverError("non-finite value in the solution at t = " + std::to_string(t_new));
        if ((step + 1) % std::max<std::size_t>(1, opts.store_stride) == 0 || step + 1 == steps) {
            times.push_back(t_new);
            levels.push_back(u);
        }
    }
    std::reverse(times.begin(), times.end());
    std::reverse(levels.begin(), levels.end());
    sol.times = std::move(times);
    sol.u = std::move(levels);
    return sol;
}

ConvexityReport convexity_report(const PideSolution& sol, double tol) {
    const Grid& g = sol.grid;
    double scale = 0.0;
    for (const auto& lvl : sol.u)
        for (double v : lvl) scale = std::max(scale, std::abs(v));
    ConvexityReport rep;
    rep.tolerance = tol >= 0.0 ? tol : 1e-7 * scale;
    rep.min_value = std::numeric_limits<double>::infinity();

    auto consider = [&](double value, std::size_t level, std::size_t k, std::vector<double> dir) {
        if (value < rep.min_value) {
            rep.min_value = value;
            rep.argmin_level = level;
            rep.argmin_t = sol.times[level];
            rep.argmin_x = g.point(k);
            rep.argmin_direction = std::move(dir);
        }
    };

    const auto& x0 = g.axis(0);
    for (std::size_t level = 0; level < sol.u.size(); ++level) {
        const auto& u = sol.u[level];
        if (g.dimension() == 1) {
            for (std::size_t j = 1; j + 1 < x0.size(); ++j) {
                auto s = stencil(x0, j);
                consider(s.second_m * u[j - 1] - s.second_0 * u[j] + s.second_p * u[j + 1], level, j, {1.0});
            }
            continue;
        }
        const auto& x1 = g.axis(1);
        const std::size_t n1 = x1.size();
        for (std::size_t i = 1; i + 1 < x0.size(); ++i) {
            auto s0 = stencil(x0, i);
            for (std::size_t j = 1; j + 1 < n1; ++j) {
                auto s1 = stencil(x1, j);
                std::size_t k = i * n1 + j;
                double h11 = s0.second_m * u[k - n1] - s0.second_0 * u[k] + s0.second_p * u[k + n1];
                double h22 = s1.second_m * u[k - 1] - s1.second_0 * u[k] + s1.second_p * u[k + 1];
                double h12 = (u[k + n1 + 1] - u[k + n1 - 1] - u[k - n1 + 1] + u[k - n1 - 1]) /
                             ((x0[i + 1] - x0[i - 1]) * (x1[j + 1] - x1[j - 1]));
                double mean = 0.5 * (h11 + h22);
                double rad = std::hypot(0.5 * (h11 - h22), h12);
                double lmin = mean - rad;
                // Eigenvector of the smaller eigenvalue.
                std::vector<double> dir{h12, lmin - h11};
                if (std::abs(h12) < 1e-300) dir = h11 <= h22 ? std::vector<double>{1.0, 0.0} : std::vector<double>{0.0, 1.0};
                double nrm = std::hypot(dir[0], dir[1]);
                dir[0] /= nrm;
                dir[1] /= nrm;
                consider(lmin, level, k, std::move(dir));
            }
        }
    }
    if (!std::isfinite(rep.min_value)) rep.min_value = 0.0;
    rep.pass = rep.min_value >= -rep.tolerance;
    return rep;
}

void PideSolution::write_csv(std::ostream& os) const {
    os << (grid.dimension() == 1 ? "t,x1,u\n" : "t,x1,x2,u\n");
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    };
    for (std::size_t level = 0; level < u.size(); ++level) {
        for (std::size_t k = 0; k < grid.total(); ++k) {
            os << num(times[level]);
            for (double c : grid.point(k)) os << ',' << num(c);
            os << ',' << num(u[level][k]) << '\n';
        }
    }
}

}  // namespace jdconvex
