#include <gtest/gtest.h>

#include <cmath>

#include "jdconvex/errors.hpp"
#include "jdconvex/harness.hpp"
#include "jdconvex/io.hpp"

using namespace jdconvex;

namespace {

ModelSpec fixture(const std::string& name) { return load_model(std::string(JDCONVEX_FIXTURES) + "/" + name + ".json"); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

ModelSpec gbm(double sigma) {
    return parse_model(R"({"n": 1, "T": 1, "beta": [[")" + std::to_string(sigma) + R"(*x1"]], "lambda": "0"})");
}

CoeffExpr k_of(const std::string& s) { return parse(s, 1, VarPolicy{false, false, true}); }

std::vector<std::vector<double>> spots_1d(double lo, double hi, std::size_t count) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < count; ++i)
        out.push_back({lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1)});
    return out;
}

Grid grid1d(std::size_t nodes) {
    double c[1] = {1.0};
    std::size_t n[1] = {nodes};
    return Grid::centered(c, 2.5, n);
}

}  // namespace

TEST(Hypotheses, IdenticalModelsPass) {
    auto m = fixture("merton1d");
    auto rep = check_hypotheses({m, m, k_of("1")}, Box::cube(1, 0.5, 2.0));
    EXPECT_TRUE(rep.all_pass());
    ASSERT_EQ(rep.checks.size(), 3u);
    for (const auto& c : rep.checks) EXPECT_FALSE(c.witness.has_value()) << c.id;
}

TEST(Hypotheses, RemovedJumpsPass) {
    auto rep = check_hypotheses({fixture("merton1d"), fixture("gbm1d"), k_of("0")}, Box::cube(1, 0.5, 2.0));
    EXPECT_TRUE(rep.all_pass());
}

TEST(Hypotheses, LargerDiffusionInLowerModelFails) {
    auto rep = check_hypotheses({gbm(0.2), gbm(0.4), k_of("1")}, Box::cube(1, 0.5, 2.0));
    EXPECT_FALSE(rep.all_pass());
    EXPECT_TRUE(rep.checks[0].pass);
    EXPECT_TRUE(rep.checks[1].pass);
    EXPECT_FALSE(rep.checks[2].pass);
    ASSERT_TRUE(rep.checks[2].witness.has_value());
    // beta_hi^2 - beta_lo^2 = (0.04 - 0.16) x^2
    const auto& w = *rep.checks[2].witness;
    EXPECT_NEAR(w.value, -0.12 * w.x[0] * w.x[0], 1e-12);
}

TEST(Hypotheses, WrongScalingAndIntensityFail) {
    auto hi = fixture("merton1d");
    auto lo = parse_model(R"({"n": 1, "T": 1, "beta": [["0.2*x1"]], "lambda": "2",
        "jumps": {"type": "atoms", "atoms": [{"weight": 1, "phi": ["0.07*x1"]}]}})");
    auto rep = check_hypotheses({hi, lo, k_of("0.5")}, Box::cube(1, 0.5, 2.0));
    EXPECT_FALSE(rep.checks[0].pass);
    EXPECT_FALSE(rep.checks[1].pass);
    EXPECT_TRUE(rep.checks[2].pass);
    auto out_of_range = check_hypotheses({hi, hi, k_of("1.5")}, Box::cube(1, 0.5, 2.0));
    EXPECT_FALSE(out_of_range.checks[1].pass);
}

TEST(Ordering, IdenticalModelsHaveZeroGap) {
    auto m = fixture("merton1d");
    auto rep = verify_ordering({m, m, k_of("1")}, parse("max(x1 - 1, 0)", 1), spots_1d(0.5, 2.0, 5), 0.0, 1.0);
    EXPECT_TRUE(rep.pass);
    EXPECT_EQ(rep.label(), "pass");
    for (const auto& p : rep.points) EXPECT_LT(std::abs(p.gap), p.slack);
}

TEST(Ordering, BlackScholesBelowMerton) {
    auto rep = verify_ordering({fixture("merton1d"), fixture("gbm1d"), k_of("0")}, parse("max(x1 - 1, 0)", 1),
                               spots_1d(0.5, 2.0, 20), 0.0, 1.0);
    EXPECT_TRUE(rep.pass) << rep.min_gap;
    EXPECT_TRUE(rep.hypotheses.all_pass());
    EXPECT_TRUE(rep.payoff_certified);
    ASSERT_EQ(rep.points.size(), 20u);
    // Gap at the money against the series and Black-Scholes formulas.
    auto atm = verify_ordering({fixture("merton1d"), fixture("gbm1d"), k_of("0")}, parse("max(x1 - 1, 0)", 1),
                               {{1.0}}, 0.0, 1.0);
    double expect = merton_series_price(0.2, 1.0, 0.1, 1.0, 1.0, 1.0) - black_scholes_call(1.0, 1.0, 0.2, 1.0);
    EXPECT_NEAR(atm.points[0].gap, expect, 1e-3 * atm.points[0].u_hi);
}

TEST(Ordering, DiffusionGapMatchesClosedForm) {
    auto rep = verify_ordering({gbm(0.3), gbm(0.1), k_of("1")}, parse("max(x1 - 1, 0)", 1), {{1.0}}, 0.0, 1.0);
    double expect = 2 * norm_cdf(0.15) - 2 * norm_cdf(0.05);
    EXPECT_TRUE(rep.pass);
    EXPECT_NEAR(rep.points[0].gap, expect, 5e-3 * expect);
}

TEST(Ordering, Transitivity) {
    auto g = parse("max(x1 - 1, 0)", 1);
    auto spots = spots_1d(0.6, 1.8, 7);
    auto ab = verify_ordering({gbm(0.2), gbm(0.1), k_of("1")}, g, spots, 0.0, 1.0);
    auto bc = verify_ordering({gbm(0.3), gbm(0.2), k_of("1")}, g, spots, 0.0, 1.0);
    auto ac = verify_ordering({gbm(0.3), gbm(0.1), k_of("1")}, g, spots, 0.0, 1.0);
    EXPECT_TRUE(ab.pass && bc.pass && ac.pass);
    for (std::size_t i = 0; i < spots.size(); ++i) {
        EXPECT_EQ(ab.points[i].u_lo, ac.points[i].u_lo);
        EXPECT_EQ(bc.points[i].u_hi, ac.points[i].u_hi);
        EXPECT_NEAR(ab.points[i].gap + bc.points[i].gap, ac.points[i].gap, 1e-12);
    }
}

TEST(Ordering, MonteCarloAgreesWithPide) {
    OrderingOptions opts;
    opts.method = Method::Mc;
    opts.sim.n_paths = 20000;
    opts.sim.seed = 42;
    ModelPair pair{fixture("merton1d"), fixture("gbm1d"), k_of("0")};
    auto g = parse("max(x1 - 1, 0)", 1);
    std::vector<std::vector<double>> spots{{0.8}, {1.0}, {1.25}};
    auto mc = verify_ordering(pair, g, spots, 0.0, 1.0, opts);
    auto pide = verify_ordering(pair, g, spots, 0.0, 1.0);
    EXPECT_EQ(mc.pass, pide.pass);
    for (std::size_t i = 0; i < spots.size(); ++i) {
        EXPECT_GT(mc.points[i].stderr_hi, 0.0);
        EXPECT_NEAR(mc.points[i].gap, pide.points[i].gap, mc.points[i].slack);
    }
    auto again = verify_ordering(pair, g, spots, 0.0, 1.0, opts);
    for (std::size_t i = 0; i < spots.size(); ++i) EXPECT_EQ(again.points[i].gap, mc.points[i].gap);
}

TEST(Ordering, LabelsHypothesesAndPayoff) {
    auto rep = verify_ordering({gbm(0.2), gbm(0.4), k_of("1")}, parse("-max(x1 - 1, 0)", 1), {{1.0}}, 0.0, 1.0,
                               {.grid_nodes = 101});
    EXPECT_FALSE(rep.payoff_certified);
    EXPECT_NE(rep.label().find("hypotheses unmet"), std::string::npos);
    EXPECT_NE(rep.label().find("payoff-not-certified"), std::string::npos);
}

TEST(Ordering, TwoDimensional) {
    auto hi = fixture("gbm2d");
    auto lo = parse_model(R"({"n": 2, "T": 1, "beta": [["0.1*x1", "0"], ["0.075*x2", "0.125*x2"]], "lambda": "0"})");
    auto rep = verify_ordering({hi, lo, parse("1", 2, VarPolicy{false, false, true})},
                               parse("max(x1 + x2 - 2, 0)", 2), {{1.0, 1.0}, {0.8, 1.3}}, 0.0, 1.0,
                               {.grid_nodes_2d = 41});
    EXPECT_TRUE(rep.hypotheses.all_pass());
    EXPECT_TRUE(rep.pass);
    EXPECT_GT(rep.min_gap, 0.0);
}

TEST(Convexity, MidpointProbe) {
    Box box = Box::cube(2, 0.5, 2.0);
    EXPECT_TRUE(probe_convexity(parse("max(x1 + x2 - 2, 0)", 2), box, 256, 1));
    EXPECT_FALSE(probe_convexity(parse("sqrt(x1 * x2)", 2), box, 256, 1));
}

TEST(Preservation, ShippedPayoffSet) {
    auto set = convex_payoff_set(2);
    ASSERT_EQ(set.size(), 3u);
    EXPECT_EQ(set[0], "max(x1 - 1, 0) + max(x2 - 1, 0)");
    for (const auto& s : convex_payoff_set(1)) EXPECT_TRUE(probe_convexity(parse(s, 1), Box::cube(1, 0.1, 8.0), 512, 2));
}

TEST(Preservation, LinearModelPasses) {
    std::vector<CoeffExpr> payoffs;
    for (const auto& s : convex_payoff_set(1)) payoffs.push_back(parse(s, 1));
    payoffs.push_back(parse("2*x1 + 1", 1));
    auto rep = preservation_scan(fixture("merton1d"), payoffs, grid1d(201), 0.0, 1.0);
    EXPECT_TRUE(rep.pass) << rep.verdict();
    for (const auto& p : rep.payoffs) {
        EXPECT_TRUE(p.convexity.pass) << p.payoff;
        EXPECT_FALSE(p.lcp.has_value());
    }
}

TEST(Preservation, SqrtJumpsFailureCoReported) {
    std::vector<CoeffExpr> payoffs{parse("max(x1 - 1, 0)", 1)};
    auto rep = preservation_scan(fixture("sqrtjump1d"), payoffs, grid1d(201), 0.0, 1.0);
    EXPECT_FALSE(rep.pass);
    EXPECT_TRUE(rep.lcp_corroborated);
    ASSERT_TRUE(rep.payoffs[0].lcp.has_value());
    EXPECT_TRUE(rep.payoffs[0].lcp->violation);
    EXPECT_EQ(rep.verdict(), "convexity failure, LCP violation co-reported");
}
