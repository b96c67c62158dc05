#include "jdconvex/mc.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include "jdconvex/errors.hpp"
#include "quadrature.hpp"

namespace jdconvex {

namespace {

constexpr double kClampFloor = 1e-12;
constexpr int kClampBudget = 10;
constexpr std::size_t kTimePanels = 64;

enum Stream : std::uint64_t { kJumpStream = 1, kBrownianStream = 2, kBridgeStream = 3 };

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Cumulative intensity Lambda(t) = int_{t0}^t lambda and its inverse.
class IntensityClock {
public:
    IntensityClock(const ModelSpec& m, double t0, double T0) : m_(m), t0_(t0), T0_(T0) {
        constant_ = !m.lambda_expr().uses_t();
        if (constant_) {
            rate_ = m.lambda_at(t0);
            total_ = rate_ * (T0 - t0);
            return;
        }
        // Panel table: cumulative integral at panel ends.
        double h = (T0 - t0) / static_cast<double>(kTimePanels);
        cumulative_.push_back(0.0);
        for (std::size_t p = 0; p < kTimePanels; ++p) {
            double a = t0 + static_cast<double>(p) * h;
            cumulative_.push_back(cumulative_.back() + panel(a, a + h));
        }
        total_ = cumulative_.back();
    }

    double total() const { return total_; }

    double operator()(double t) const {
        if (constant_) return rate_ * (t - t0_);
        double h = (T0_ - t0_) / static_cast<double>(kTimePanels);
        auto p = static_cast<std::size_t>(std::floor((t - t0_) / h));
        p = std::min(p, kTimePanels - 1);
        double a = t0_ + static_cast<double>(p) * h;
        return cumulative_[p] + panel(a, t);
    }

    // Smallest t with Lambda(t) = s, by bisection to 1e-12.
    double inverse(double s) const {
        if (constant_) return t0_ + s / rate_;
        double lo = t0_, hi = T0_;
        while (hi - lo > 1e-12) {
            double mid = 0.5 * (lo + hi);
            if ((*this)(mid) < s)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    }

private:
    double panel(double a, double b) const {
        return detail::integrate([&](double t) { return m_.lambda_at(t); }, a, b, 1);
    }

    const ModelSpec& m_;
    double t0_, T0_;
    bool constant_ = false;
    double rate_ = 0.0;
    double total_ = 0.0;
    std::vector<double> cumulative_;
};

std::vector<JumpEvent> draw_jumps(const IntensityClock& clock, std::mt19937_64& rng) {
    std::vector<JumpEvent> jumps;
    if (clock.total() <= 0.0) return jumps;
    std::exponential_distribution<double> expo(1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double s = 0.0;
    for (;;) {
        s += expo(rng);
        double z = unit(rng);
        if (s > clock.total()) break;
        jumps.push_back({clock.inverse(s), z});
    }
    return jumps;
}

// Runs `body(p)` for every path index; shards own contiguous index ranges so
// outputs land in fixed slots regardless of the shard count.
template <class Body>
void for_each_path(std::size_t n_paths, std::size_t shards, Body&& body) {
    shards = std::max<std::size_t>(1, std::min(shards, n_paths));
    if (shards == 1) {
        for (std::size_t p = 0; p < n_paths; ++p) body(p);
        return;
    }
    std::vector<std::exception_ptr> errors(shards);
    std::vector<std::thread> workers;
    std::size_t chunk = (n_paths + shards - 1) / shards;
    for (std::size_t s = 0; s < shards; ++s) {
        workers.emplace_back([&, s] {
            std::size_t lo = s * chunk, hi = std::min(n_paths, lo + chunk);
            try {
                for (std::size_t p = lo; p < hi; ++p) body(p);
            } catch (...) {
                errors[s] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

void check_inputs(const ModelSpec& m, std::span<const double> x0, double t0, double T0,
                  const SimulationOptions& opts) {
    if (x0.size() != m.dimension()) throw Error("spot dimension does not match the model");
    for (double v : x0)
        if (!(v > 0.0)) throw Error("spot must lie in the positive orthant");
    if (!(t0 <= T0) || T0 > m.horizon() + 1e-12 || t0 < 0.0)
        throw Error("need 0 <= t0 <= T0 <= T");
    if (opts.n_paths == 0) throw Error("n_paths must be positive");
}

Box probe_box(std::span<const double> x0) {
    Box box;
    for (double v : x0) {
        box.lo.push_back(0.25 * v);
        box.hi.push_back(4.0 * v);
    }
    return box;
}

}  // namespace

namespace detail {
std::uint64_t path_seed(std::uint64_t master, std::uint64_t index, std::uint64_t stream) {
    return splitmix64(splitmix64(splitmix64(master) ^ index) + stream);
}
}  // namespace detail

const char* to_string(Scheme s) { return s == Scheme::Euler ? "euler" : "closed_form_linear"; }

PathEnsemble simulate(const ModelSpec& m, std::span<const double> x0, double t0, double T0,
                      const SimulationOptions& opts) {
    check_inputs(m, x0, t0, T0, opts);
    if (opts.n_steps == 0) throw Error("n_steps must be positive");
    const std::size_t n = m.dimension();

    PathEnsemble ens;
    ens.dimension = n;
    ens.n_paths = opts.n_paths;
    ens.n_steps = opts.n_steps;
    ens.master_seed = opts.seed;
    ens.scheme = Scheme::Euler;
    ens.terminal.assign(n * opts.n_paths, 0.0);
    ens.jump_log.resize(opts.keep_jump_log ? opts.n_paths : 0);
    Box box = probe_box(x0);
    for (std::size_t i = 0; i < n; ++i)
        ens.log_space.push_back(beta_row_proportional(m, i, box, opts.seed + i));

    IntensityClock clock(m, t0, T0);
    const double h = (T0 - t0) / static_cast<double>(opts.n_steps);

    for_each_path(opts.n_paths, opts.shards, [&](std::size_t p) {
        std::mt19937_64 jump_rng(detail::path_seed(opts.seed, p, kJumpStream));
        std::mt19937_64 bm_rng(detail::path_seed(opts.seed, p, kBrownianStream));
        std::mt19937_64 bridge_rng(detail::path_seed(opts.seed, p, kBridgeStream));
        std::normal_distribution<double> normal(0.0, 1.0);

        std::vector<JumpEvent> jumps = draw_jumps(clock, jump_rng);
        std::vector<double> x(x0.begin(), x0.end()), next(n), beta(n * n), phi(n), dw(n), w_prev(n),
            w_end(n), w_mid(n);
        int clamps = 0;
        std::size_t next_jump = 0;

        auto clamp = [&](std::size_t step) {
            for (auto& xi : x) {
                if (!(xi > 0.0)) {
                    xi = kClampFloor;
                    if (++clamps > kClampBudget)
                        throw SimulationError("positivity clamp budget exceeded", p, step);
                }
            }
        };

        auto euler = [&](double a, double dt, std::span<const double> inc, std::size_t step) {
            if (dt <= 0.0) return;
            auto mu = compensator_drift(m, x, a);
            m.beta_at(x, a, beta);
            for (std::size_t i = 0; i < n; ++i) {
                if (ens.log_space[i]) {
                    double var = 0.0, diff = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        double g = beta[i * n + j] / x[i];
                        var += g * g;
                        diff += g * inc[j];
                    }
                    next[i] = x[i] * std::exp((mu[i] / x[i] - 0.5 * var) * dt + diff);
                } else {
                    double diff = 0.0;
                    for (std::size_t j = 0; j < n; ++j) diff += beta[i * n + j] * inc[j];
                    next[i] = x[i] + mu[i] * dt + diff;
                }
            }
            x.swap(next);
            clamp(step);
        };

        for (std::size_t k = 0; k < opts.n_steps; ++k) {
            double a = t0 + static_cast<double>(k) * h;
            double b = k + 1 == opts.n_steps ? T0 : t0 + static_cast<double>(k + 1) * h;
            double sqrt_dt = std::sqrt(b - a);
            for (std::size_t j = 0; j < n; ++j) w_end[j] = sqrt_dt * normal(bm_rng);

            // Jump times inside (a, b] become grid points; the Brownian path is
            // filled in by bridge sampling so the base increments stay common.
            std::fill(w_prev.begin(), w_prev.end(), 0.0);
            double s_prev = a;
            while (next_jump < jumps.size() && jumps[next_jump].time <= b) {
                const auto& jump = jumps[next_jump];
                double s = std::max(jump.time, s_prev);
                double span = b - s_prev;
                for (std::size_t j = 0; j < n; ++j) {
                    double frac = span > 0.0 ? (s - s_prev) / span : 1.0;
                    double var = span > 0.0 ? (s - s_prev) * (b - s) / span : 0.0;
                    w_mid[j] = w_prev[j] + frac * (w_end[j] - w_prev[j]) + std::sqrt(var) * normal(bridge_rng);
                    dw[j] = w_mid[j] - w_prev[j];
                }
                euler(s_prev, s - s_prev, dw, k);
                m.phi_at(x, s, jump.z, phi);
                for (std::size_t i = 0; i < n; ++i) x[i] += phi[i];
                clamp(k);
                w_prev = w_mid;
                s_prev = s;
                ++next_jump;
            }
            for (std::size_t j = 0; j < n; ++j) dw[j] = w_end[j] - w_prev[j];
            euler(s_prev, b - s_prev, dw, k);
        }
        std::copy(x.begin(), x.end(), ens.terminal.begin() + static_cast<std::ptrdiff_t>(p * n));
        if (opts.keep_jump_log) ens.jump_log[p] = std::move(jumps);
    });
    return ens;
}

PriceEstimate estimate(const PathEnsemble& ens, const CoeffExpr& payoff) {
    // Two-pass in path order keeps the reduction independent of sharding.
    std::vector<double> values(ens.n_paths);
    for (std::size_t p = 0; p < ens.n_paths; ++p) values[p] = eval(payoff, EvalEnv{ens.path(p), 0.0, std::nullopt});
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(ens.n_paths);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    PriceEstimate est;
    est.mean = mean;
    est.n_paths = ens.n_paths;
    est.std_error = ens.n_paths > 1 ? std::sqrt(ss / static_cast<double>(ens.n_paths - 1) /
                                                static_cast<double>(ens.n_paths))
                                    : 0.0;
    return est;
}

PriceEstimate price_mc(const ModelSpec& m, const CoeffExpr& payoff, std::span<const double> x,
                       double t, double T0, const SimulationOptions& opts) {
    SimulationOptions o = opts;
    o.keep_jump_log = false;
    return estimate(simulate(m, x, t, T0, o), payoff);
}

PathEnsemble simulate_linear_closed_form(const ModelSpec& m, std::span<const double> x0, double t0,
                                         double T0, const SimulationOptions& opts) {
    check_inputs(m, x0, t0, T0, opts);
    const std::size_t n = m.dimension();
    if (!is_linear(m, probe_box(x0), opts.seed))
        throw ModelError("closed-form simulation refused: model is not linear (beta_ij = x_i g_ij(t), phi_i = x_i g_i(t,z))");

    // Coefficients at the unit point: gamma_ij(t) = beta_ij(1, t), gamma_i(t,z) = phi_i(1, t, z).
    const std::vector<double> ones(n, 1.0);
    std::vector<double> beta(n * n), phi(n);
    const bool time_dependent = [&] {
        for (std::size_t k = 0; k < n * n; ++k)
            if (m.beta_expr(k / n, k % n).uses_t()) return true;
        return m.lambda_expr().uses_t() || [&] {
            for (const auto& node : m.jump_nodes())
                for (std::size_t i = 0; i < n; ++i)
                    if (m.phi_expr(node, i).uses_t()) return true;
            return false;
        }();
    }();
    const std::size_t panels = time_dependent ? kTimePanels : 1;

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k <= i; ++k) {
            double c = detail::integrate(
                [&](double t) {
                    m.beta_at(ones, t, beta);
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) s += beta[i * n + j] * beta[k * n + j];
                    return s;
                },
                t0, T0, panels);
            cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = c;
            cov(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = c;
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    Eigen::MatrixXd root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

    std::vector<double> compensator(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        compensator[i] = detail::integrate(
            [&](double t) {
                double lam = m.lambda_at(t);
                double s = 0.0;
                for (const auto& node : m.jump_nodes()) {
                    m.phi_at(node, ones, t, phi);
                    s += node.weight * phi[i];
                }
                return lam * s;
            },
            t0, T0, panels);

    PathEnsemble ens;
    ens.dimension = n;
    ens.n_paths = opts.n_paths;
    ens.n_steps = 0;
    ens.master_seed = opts.seed;
    ens.scheme = Scheme::ClosedFormLinear;
    ens.terminal.assign(n * opts.n_paths, 0.0);
    ens.jump_log.resize(opts.keep_jump_log ? opts.n_paths : 0);
    IntensityClock clock(m, t0, T0);

    for_each_path(opts.n_paths, opts.shards, [&](std::size_t p) {
        std::mt19937_64 jump_rng(detail::path_seed(opts.seed, p, kJumpStream));
        std::mt19937_64 bm_rng(detail::path_seed(opts.seed, p, kBrownianStream));
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd g(static_cast<Eigen::Index>(n));
        for (std::size_t j = 0; j < n; ++j) g(static_cast<Eigen::Index>(j)) = normal(bm_rng);
        Eigen::VectorXd y = root * g;

        std::vector<JumpEvent> jumps = draw_jumps(clock, jump_rng);
        std::vector<double> factor(n), jphi(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto ii = static_cast<Eigen::Index>(i);
            factor[i] = std::exp(-0.5 * cov(ii, ii) + y(ii) - compensator[i]);
        }
        for (const auto& jump : jumps) {
            m.phi_at(ones, jump.time, jump.z, jphi);
            for (std::size_t i = 0; i < n; ++i) factor[i] *= 1.0 + jphi[i];
        }
        for (std::size_t i = 0; i < n; ++i) ens.terminal[p * n + i] = x0[i] * factor[i];
        if (opts.keep_jump_log) ens.jump_log[p] = std::move(jumps);
    });
    return ens;
}

double black_scholes_call(double x, double strike, double sigma, double tau) {
    if (tau <= 0.0 || sigma <= 0.0) return std::max(x - strike, 0.0);
    double sd = sigma * std::sqrt(tau);
    double d1 = (std::log(x / strike) + 0.5 * sd * sd) / sd;
    double d2 = d1 - sd;
    auto N = [](double v) { return 0.5 * std::erfc(-v / std::sqrt(2.0)); };
    return x * N(d1) - strike * N(d2);
}

double merton_series_price(double sigma, double lam, double gamma, double x, double strike, double tau) {
    if (!(1.0 + gamma > 0.0)) throw Error("merton_series_price needs 1 + gamma > 0");
    if (!(tau > 0.0)) throw Error("merton_series_price needs tau > 0");
    const double mean_jumps = lam * tau;
    if (mean_jumps == 0.0 || gamma == 0.0) return black_scholes_call(x, strike, sigma, tau);
    const double drifted = x * std::exp(-lam * gamma * tau);
    double sum = 0.0;
    double log_weight = -mean_jumps;  // log P(N = 0)
    for (std::size_t k = 0;; ++k) {
        double spot = drifted * std::pow(1.0 + gamma, static_cast<double>(k));
        double term = std::exp(log_weight) * black_scholes_call(spot, strike, sigma, tau);
        sum += term;
        if (static_cast<double>(k) > mean_jumps && term < 1e-12 * sum) break;
        if (k > 10000) break;
        log_weight += std::log(mean_jumps) - std::log(static_cast<double>(k + 1));
    }
    return sum;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

}  // namespace jdconvex
