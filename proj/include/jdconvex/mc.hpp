#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jdconvex/expr.hpp"
#include "jdconvex/model.hpp"

namespace jdconvex {

enum class Scheme { Euler, ClosedFormLinear };
const char* to_string(Scheme s);

struct JumpEvent {
    double time = 0.0;
    double z = 0.0;
};

/// Terminal values and jump history of a set of simulated paths.
struct PathEnsemble {
    std::size_t dimension = 0;
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    std::uint64_t master_seed = 0;
    Scheme scheme = Scheme::Euler;
    std::vector<double> terminal;                 // n_paths x dimension, row-major
    std::vector<std::vector<JumpEvent>> jump_log;  // per path
    std::vector<bool> log_space;                  // per coordinate, Euler only

    std::span<const double> path(std::size_t p) const {
        return {terminal.data() + p * dimension, dimension};
    }
};

struct PriceEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
};

struct SimulationOptions {
    std::size_t n_paths = 10000;
    std::size_t n_steps = 50;
    std::uint64_t seed = 1;
    /// Number of worker threads; results do not depend on it.
    std::size_t shards = 1;
    bool keep_jump_log = true;
};

/// Euler-Maruyama between jumps, exact jump times from the time-changed
/// Poisson process. Coordinates whose beta row is proportional to x_i are
/// stepped in log space; others use a clamp at 1e-12 with a budget of 10 per
/// path, after which SimulationError is thrown.
PathEnsemble simulate(const ModelSpec& m, std::span<const double> x0, double t0, double T0,
                      const SimulationOptions& opts);

/// Mean and standard error of payoff(X(T0)).
PriceEstimate price_mc(const ModelSpec& m, const CoeffExpr& payoff, std::span<const double> x,
                       double t, double T0, const SimulationOptions& opts);

/// Payoff statistics over an existing ensemble.
PriceEstimate estimate(const PathEnsemble& ens, const CoeffExpr& payoff);

/// Exact sampling for models with beta_ij = x_i gamma_ij(t), phi_i = x_i gamma_i(t,z).
/// Throws ModelError if the linearity probe fails.
PathEnsemble simulate_linear_closed_form(const ModelSpec& m, std::span<const double> x0, double t0,
                                         double T0, const SimulationOptions& opts);

/// Zero-rate Black-Scholes call price.
double black_scholes_call(double x, double strike, double sigma, double tau);

/// Call price under constant-coefficient one-dimensional jump diffusion with
/// a single relative jump size gamma, by conditioning on the jump count.
double merton_series_price(double sigma, double lam, double gamma, double x, double strike, double tau);

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b);

namespace detail {
/// Per-path seed derived from the master seed and the path index only.
std::uint64_t path_seed(std::uint64_t master, std::uint64_t index, std::uint64_t stream);
}  // namespace detail

}  // namespace jdconvex
