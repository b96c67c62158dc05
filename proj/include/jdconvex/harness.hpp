#pragma once

// End-to-end experiments: price ordering between two models and convexity
// preservation scans.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jdconvex/expr.hpp"
#include "jdconvex/lcp.hpp"
#include "jdconvex/mc.hpp"
#include "jdconvex/model.hpp"
#include "jdconvex/pide.hpp"

namespace jdconvex {

/// Ordered pair of models. The claim under test is u_lo <= u_hi for convex
/// payoffs when lambda_lo <= lambda_hi, phi_lo = k(z) phi_hi with 0 <= k <= 1
/// and beta_lo beta_lo^T <= beta_hi beta_hi^T.
struct ModelPair {
    ModelSpec hi;
    ModelSpec lo;
    CoeffExpr k;  // in z only
};

struct HypothesisCheck {
    std::string id;  // "i", "ii", "iii"
    bool pass = true;
    std::string detail;
    std::optional<Witness> witness;
};

struct HypothesisReport {
    std::vector<HypothesisCheck> checks;
    bool all_pass() const;
};

HypothesisReport check_hypotheses(const ModelPair& pair, const Box& box, std::size_t n_samples = 256,
                                  std::uint64_t seed = 1);

enum class Method { Pide, Mc };
const char* to_string(Method m);

struct OrderingOptions {
    Method method = Method::Pide;
    // PIDE
    std::size_t grid_nodes = 401;     // 1D
    std::size_t grid_nodes_2d = 101;  // per axis in 2D
    double log_margin = 2.5;       // grid reaches this far beyond the spots in ln x
    SolveOptions solve;
    double pide_slack = 1e-6;  // times max |u| over the spots
    // MC
    SimulationOptions sim;
    double mc_slack_stderr = 3.0;  // times the combined standard error
    // Payoff midpoint-convexity probe
    std::size_t convexity_probe_pairs = 256;
    std::uint64_t probe_seed = 1;
};

struct OrderingPoint {
    std::vector<double> x;
    double t = 0.0;
    double u_hi = 0.0;
    double u_lo = 0.0;
    double gap = 0.0;  // u_hi - u_lo
    double stderr_hi = 0.0;
    double stderr_lo = 0.0;
    double slack = 0.0;
    bool pass = true;
};

struct OrderingReport {
    Method method = Method::Pide;
    HypothesisReport hypotheses;
    bool payoff_certified = true;  // midpoint-convexity probe found nothing
    std::vector<OrderingPoint> points;
    std::string slack_policy;
    bool pass = true;  // gap >= -slack at every point
    double min_gap = 0.0;
    double max_abs_gap = 0.0;
    /// "pass", "fail"; suffixed with "; hypotheses unmet" / "; payoff-not-certified".
    std::string label() const;
};

OrderingReport verify_ordering(const ModelPair& pair, const CoeffExpr& payoff,
                               const std::vector<std::vector<double>>& spots, double t, double T0,
                               const OrderingOptions& opts = {});

/// Sampled midpoint convexity of g on a box; returns false on a violation.
bool probe_convexity(const CoeffExpr& g, const Box& box, std::size_t n_pairs, std::uint64_t seed);

struct PayoffScan {
    std::string payoff;
    bool payoff_certified = true;
    ConvexityReport convexity;
    std::size_t n_steps = 0;
    std::optional<LcpReport> lcp;  // only after a convexity failure
};

struct PreservationReport {
    std::vector<PayoffScan> payoffs;
    bool pass = true;           // every solution convex within tolerance
    bool lcp_corroborated = true;  // every convexity failure matched by an LCP violation
    std::string verdict() const;
};

struct PreservationOptions {
    SolveOptions solve;
    double tol_factor = 1e-7;  // tolerance = tol_factor * max |u|
    std::size_t lcp_points = 10;
    std::uint64_t seed = 1;
};

/// Shipped convex payoffs with linear growth: a call, a smoothed |x - 1| and a
/// capped square. In 2D each is summed over the axes.
std::vector<std::string> convex_payoff_set(std::size_t n);

/// PIDE solve and convexity report per payoff; convexity failures are
/// cross-checked by an M-scan at the argmin and at sampled grid points.
PreservationReport preservation_scan(const ModelSpec& m, const std::vector<CoeffExpr>& payoffs, const Grid& grid,
                                     double t_start, double T0, const PreservationOptions& opts = {});

}  // namespace jdconvex
