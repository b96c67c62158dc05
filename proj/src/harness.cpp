#include "jdconvex/harness.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "jdconvex/errors.hpp"

namespace jdconvex {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

Eigen::MatrixXd covariance(const ModelSpec& m, std::span<const double> x, double t) {
    const auto n = static_cast<Eigen::Index>(m.dimension());
    std::vector<double> beta(m.dimension() * m.dimension());
    m.beta_at(x, t, beta);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> B(beta.data(), n, n);
    return B * B.transpose();
}

}  // namespace

bool HypothesisReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const HypothesisCheck& c) { return c.pass; });
}

HypothesisReport check_hypotheses(const ModelPair& pair, const Box& box, std::size_t n_samples, std::uint64_t seed) {
    const std::size_t n = pair.hi.dimension();
    if (pair.lo.dimension() != n) throw Error("models of a pair must have the same dimension");
    if (box.lo.size() != n || box.hi.size() != n) throw Error("sample box dimension mismatch");
    const double T = std::min(pair.hi.horizon(), pair.lo.horizon());

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    HypothesisCheck lam{"i", true, "", {}}, scale{"ii", true, "", {}}, cov{"iii", true, "", {}};
    double worst_lam = -std::numeric_limits<double>::infinity();
    double worst_phi = 0.0;
    double worst_eig = std::numeric_limits<double>::infinity();
    std::vector<double> phi_hi(n), phi_lo(n);

    for (std::size_t s = 0; s < n_samples; ++s) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = box.lo[i] + unit(rng) * (box.hi[i] - box.lo[i]);
        double t = unit(rng) * T;
        double z = unit(rng);

        double d = pair.lo.lambda_at(t) - pair.hi.lambda_at(t);
        if (d > worst_lam) {
            worst_lam = d;
            if (d > 0.0) lam.witness = Witness{x, t, std::nullopt, std::nullopt, d};
        }

        double k = eval(pair.k, EvalEnv{x, t, z});
        pair.hi.phi_at(x, t, z, phi_hi);
        pair.lo.phi_at(x, t, z, phi_lo);
        if (k < 0.0 || k > 1.0) {
            if (scale.pass) scale.witness = Witness{x, t, z, std::nullopt, k};
            scale.pass = false;
            scale.detail = "k(z) = " + num(k) + " outside [0, 1]";
        }
        for (std::size_t i = 0; i < n; ++i) {
            double e = std::abs(phi_lo[i] - k * phi_hi[i]);
            if (e > worst_phi) {
                worst_phi = e;
                if (e >= 1e-10) scale.witness = Witness{x, t, z, i, e};
            }
        }

        Eigen::MatrixXd diff = covariance(pair.hi, x, t) - covariance(pair.lo, x, t);
        double eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(diff, Eigen::EigenvaluesOnly).eigenvalues()(0);
        if (eig < worst_eig) {
            worst_eig = eig;
            if (eig < -1e-10) cov.witness = Witness{x, t, std::nullopt, std::nullopt, eig};
        }
    }
    lam.pass = worst_lam <= 0.0;
    lam.detail = "max lambda_lo - lambda_hi = " + num(worst_lam);
    if (scale.pass) {
        scale.pass = worst_phi < 1e-10;
        scale.detail = "max |phi_lo - k phi_hi| = " + num(worst_phi);
    }
    cov.pass = worst_eig >= -1e-10;
    cov.detail = "min eigenvalue of beta_hi beta_hi^T - beta_lo beta_lo^T = " + num(worst_eig);
    if (lam.pass) lam.witness.reset();
    if (scale.pass) scale.witness.reset();
    if (cov.pass) cov.witness.reset();
    return {{lam, scale, cov}};
}

const char* to_string(Method m) { return m == Method::Pide ? "pide" : "mc"; }

bool probe_convexity(const CoeffExpr& g, const Box& box, std::size_t n_pairs, std::uint64_t seed) {
    const std::size_t n = box.lo.size();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> a(n), b(n), c(n);
    for (std::size_t p = 0; p < n_pairs; ++p) {
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = box.lo[i] + unit(rng) * (box.hi[i] - box.lo[i]);
            b[i] = box.lo[i] + unit(rng) * (box.hi[i] - box.lo[i]);
            c[i] = 0.5 * (a[i] + b[i]);
        }
        double ga = eval(g, EvalEnv{a, 0.0, std::nullopt});
        double gb = eval(g, EvalEnv{b, 0.0, std::nullopt});
        double gc = eval(g, EvalEnv{c, 0.0, std::nullopt});
        double scale = 1.0 + std::abs(ga) + std::abs(gb);
        if (gc > 0.5 * (ga + gb) + 1e-12 * scale) return false;
    }
    return true;
}

std::string OrderingReport::label() const {
    std::string s = pass ? "pass" : "fail";
    if (!hypotheses.all_pass()) s += "; hypotheses unmet";
    if (!payoff_certified) s += "; payoff-not-certified";
    return s;
}

OrderingReport verify_ordering(const ModelPair& pair, const CoeffExpr& payoff,
                               const std::vector<std::vector<double>>& spots, double t, double T0,
                               const OrderingOptions& opts) {
    const std::size_t n = pair.hi.dimension();
    if (spots.empty()) throw Error("no spots given");
    OrderingReport rep;
    rep.method = opts.method;

    Box span{spots.front(), spots.front()};
    for (const auto& x : spots) {
        if (x.size() != n) throw Error("spot has the wrong dimension");
        for (std::size_t i = 0; i < n; ++i) {
            span.lo[i] = std::min(span.lo[i], x[i]);
            span.hi[i] = std::max(span.hi[i], x[i]);
        }
    }
    // Hypotheses are recorded before any pricing.
    Box hyp_box = span;
    for (std::size_t i = 0; i < n; ++i) {
        hyp_box.lo[i] *= 0.5;
        hyp_box.hi[i] *= 2.0;
    }
    rep.hypotheses = check_hypotheses(pair, hyp_box, 256, opts.probe_seed);
    rep.payoff_certified = probe_convexity(payoff, hyp_box, opts.convexity_probe_pairs, opts.probe_seed);

    if (opts.method == Method::Pide) {
        if (n > 2) throw Error("the PIDE method supports one or two dimensions");
        std::vector<double> lo(n), hi(n);
        std::vector<std::size_t> nodes(n, n == 1 ? opts.grid_nodes : opts.grid_nodes_2d);
        for (std::size_t i = 0; i < n; ++i) {
            lo[i] = span.lo[i] * std::exp(-opts.log_margin);
            hi[i] = span.hi[i] * std::exp(opts.log_margin);
        }
        Grid grid = Grid::log_uniform(lo, hi, nodes);
        SolveOptions so = opts.solve;
        so.store_stride = std::numeric_limits<std::size_t>::max();
        auto sol_hi = solve(pair.hi, payoff, grid, t, T0, so);
        auto sol_lo = solve(pair.lo, payoff, grid, t, T0, so);
        double scale = 0.0;
        for (const auto& x : spots) {
            OrderingPoint p;
            p.x = x;
            p.t = t;
            p.u_hi = sol_hi.value_at(x);
            p.u_lo = sol_lo.value_at(x);
            p.gap = p.u_hi - p.u_lo;
            scale = std::max({scale, std::abs(p.u_hi), std::abs(p.u_lo)});
            rep.points.push_back(std::move(p));
        }
        for (auto& p : rep.points) p.slack = opts.pide_slack * scale;
        rep.slack_policy = "pide: slack = " + num(opts.pide_slack) + " * max|u| over spots";
    } else {
        for (const auto& x : spots) {
            auto e_hi = price_mc(pair.hi, payoff, x, t, T0, opts.sim);
            auto e_lo = price_mc(pair.lo, payoff, x, t, T0, opts.sim);
            OrderingPoint p;
            p.x = x;
            p.t = t;
            p.u_hi = e_hi.mean;
            p.u_lo = e_lo.mean;
            p.gap = p.u_hi - p.u_lo;
            p.stderr_hi = e_hi.std_error;
            p.stderr_lo = e_lo.std_error;
            p.slack = opts.mc_slack_stderr * std::hypot(p.stderr_hi, p.stderr_lo);
            rep.points.push_back(std::move(p));
        }
        rep.slack_policy = "mc: slack = " + num(opts.mc_slack_stderr) +
                           " * sqrt(stderr_hi^2 + stderr_lo^2), common random numbers";
    }
    rep.min_gap = std::numeric_limits<double>::infinity();
    for (auto& p : rep.points) {
        p.pass = p.gap >= -p.slack;
        rep.pass = rep.pass && p.pass;
        rep.min_gap = std::min(rep.min_gap, p.gap);
        rep.max_abs_gap = std::max(rep.max_abs_gap, std::abs(p.gap));
    }
    return rep;
}

std::string PreservationReport::verdict() const {
    if (pass) return "convexity preserved on all payoffs";
    return lcp_corroborated ? "convexity failure, LCP violation co-reported"
                            : "convexity failure, no LCP violation found";
}

std::vector<std::string> convex_payoff_set(std::size_t n) {
    const char* terms[] = {"max(xI - 1, 0)", "sqrt((xI - 1)^2 + 0.01)", "min(xI, 2)^2 + 4*max(xI - 2, 0)"};
    std::vector<std::string> out;
    for (const char* term : terms) {
        std::string s;
        for (std::size_t i = 1; i <= n; ++i) {
            std::string t = term;
            for (std::size_t p = t.find('I'); p != std::string::npos; p = t.find('I'))
                t.replace(p, 1, std::to_string(i));
            s += (i > 1 ? " + " : "") + t;
        }
        out.push_back(std::move(s));
    }
    return out;
}

PreservationReport preservation_scan(const ModelSpec& m, const std::vector<CoeffExpr>& payoffs, const Grid& grid,
                                     double t_start, double T0, const PreservationOptions& opts) {
    const std::size_t n = m.dimension();
    PreservationReport rep;
    Box box{std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        box.lo[i] = grid.lo(i);
        box.hi[i] = grid.hi(i);
    }
    // Interior region for the LCP cross-check and the payoff probe.
    Box inner = box;
    for (std::size_t i = 0; i < n; ++i) {
        double c = std::sqrt(box.lo[i] * box.hi[i]);
        double r = std::sqrt(box.hi[i] / box.lo[i]);
        inner.lo[i] = c / std::pow(r, 0.5);
        inner.hi[i] = c * std::pow(r, 0.5);
    }
    for (const auto& g : payoffs) {
        PayoffScan ps;
        ps.payoff = g.source();
        ps.payoff_certified = probe_convexity(g, inner, 256, opts.seed);
        auto sol = solve(m, g, grid, t_start, T0, opts.solve);
        ps.n_steps = sol.n_steps;
        double scale = 0.0;
        for (const auto& lvl : sol.u)
            for (double v : lvl) scale = std::max(scale, std::abs(v));
        ps.convexity = convexity_report(sol, opts.tol_factor * scale);
        if (!ps.convexity.pass) {
            rep.pass = false;
            ScanConfig cfg;
            cfg.t = ps.convexity.argmin_t;
            cfg.points.push_back(ps.convexity.argmin_x);
            for (auto& x : scan_points(inner, opts.lcp_points, opts.seed)) cfg.points.push_back(std::move(x));
            cfg.directions.push_back(ps.convexity.argmin_direction);
            if (n > 1)
                for (auto& v : battery_directions(n, 8)) cfg.directions.push_back(std::move(v));
            ps.lcp = lcp_scan(m, LcpOperator::M, cfg);
            rep.lcp_corroborated = rep.lcp_corroborated && ps.lcp->violation;
        }
        rep.payoffs.push_back(std::move(ps));
    }
    return rep;
}

}  // namespace jdconvex
