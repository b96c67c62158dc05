#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "jdconvex/errors.hpp"
#include "jdconvex/io.hpp"
#include "jdconvex/mc.hpp"

using namespace jdconvex;

namespace {

ModelSpec fixture(const std::string& name) { return load_model(std::string(JDCONVEX_FIXTURES) + "/" + name + ".json"); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Zero-rate Black-Scholes call, written out independently of the library.
double bs_oracle(double x, double k, double s, double tau) {
    double sd = s * std::sqrt(tau);
    double d1 = (std::log(x / k) + 0.5 * sd * sd) / sd;
    return x * norm_cdf(d1) - k * norm_cdf(d1 - sd);
}

// Sum over the Poisson jump count with a fixed number of terms.
double merton_oracle(double s, double lam, double g, double x, double k, double tau) {
    double total = 0.0;
    for (int n = 0; n < 80; ++n) {
        double p = std::exp(-lam * tau + n * std::log(lam * tau) - std::lgamma(n + 1.0));
        total += p * bs_oracle(x * std::pow(1 + g, n) * std::exp(-lam * g * tau), k, s, tau);
    }
    return total;
}

SimulationOptions paths(std::size_t n, std::uint64_t seed = 1) {
    SimulationOptions o;
    o.n_paths = n;
    o.seed = seed;
    return o;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST(Oracles, BlackScholesAtTheMoney) {
    // 2 N(sigma sqrt(tau) / 2) - 1
    EXPECT_NEAR(black_scholes_call(1, 1, 0.2, 1), 2 * norm_cdf(0.1) - 1, 1e-15);
    EXPECT_NEAR(black_scholes_call(1, 1, 0.2, 1), 0.0797, 1e-4);
    for (double x : {0.5, 0.9, 1.3, 2.0}) EXPECT_NEAR(black_scholes_call(x, 1.1, 0.3, 0.7), bs_oracle(x, 1.1, 0.3, 0.7), 1e-14);
}

TEST(Oracles, MertonSeries) {
    EXPECT_EQ(merton_series_price(0.2, 0.0, 0.1, 1, 1, 1), black_scholes_call(1, 1, 0.2, 1));
    EXPECT_EQ(merton_series_price(0.2, 1.0, 0.0, 1, 1, 1), black_scholes_call(1, 1, 0.2, 1));
    for (double x : {0.6, 1.0, 1.7})
        EXPECT_NEAR(merton_series_price(0.2, 1, 0.1, x, 1, 1), merton_oracle(0.2, 1, 0.1, x, 1, 1), 1e-12);
    EXPECT_NEAR(merton_series_price(0.25, 3, -0.2, 1.2, 1, 0.5), merton_oracle(0.25, 3, -0.2, 1.2, 1, 0.5), 1e-12);
}

TEST(Oracles, KolmogorovSmirnov) {
    EXPECT_EQ(ks_statistic({1, 2, 3}, {1, 2, 3}), 0.0);
    EXPECT_EQ(ks_statistic({1, 2}, {3, 4}), 1.0);
    EXPECT_DOUBLE_EQ(ks_statistic({1, 2, 3, 4}, {3, 4, 5, 6}), 0.5);
}

TEST(Simulate, NoRandomnessGivesConstantPaths) {
    auto m = parse_model(R"({"n": 2, "T": 1, "beta": [["0", "0"], ["0", "0"]], "lambda": "0"})");
    std::vector<double> x0{1.3, 0.7};
    auto ens = simulate(m, x0, 0.0, 1.0, paths(100));
    for (std::size_t p = 0; p < ens.n_paths; ++p) {
        EXPECT_EQ(ens.path(p)[0], 1.3);
        EXPECT_EQ(ens.path(p)[1], 0.7);
    }
}

TEST(Simulate, DeterministicAcrossRunsAndShards) {
    auto m = fixture("cev2d");
    std::vector<double> x0{1.0, 1.0};
    auto o = paths(2000, 42);
    auto a = simulate(m, x0, 0.0, 1.0, o);
    for (std::size_t shards : {1, 2, 8}) {
        o.shards = shards;
        auto b = simulate(m, x0, 0.0, 1.0, o);
        EXPECT_TRUE(same_bits(a.terminal, b.terminal)) << shards;
        ASSERT_EQ(a.jump_log.size(), b.jump_log.size());
        for (std::size_t p = 0; p < a.jump_log.size(); ++p) ASSERT_EQ(a.jump_log[p].size(), b.jump_log[p].size());
    }
    auto c = simulate(m, x0, 0.0, 1.0, paths(2000, 43));
    EXPECT_FALSE(same_bits(a.terminal, c.terminal));
}

TEST(Simulate, JumpCountsArePoisson) {
    auto m = fixture("merton1d");
    std::vector<double> x0{1.0};
    auto ens = simulate(m, x0, 0.0, 1.0, paths(20000));
    double mean = 0.0;
    for (const auto& log : ens.jump_log) {
        mean += static_cast<double>(log.size());
        for (const auto& j : log) {
            EXPECT_GE(j.time, 0.0);
            EXPECT_LE(j.time, 1.0);
        }
    }
    mean /= 20000.0;
    // lambda tau = 1, sd of the mean = 1/sqrt(20000)
    EXPECT_NEAR(mean, 1.0, 4.0 / std::sqrt(20000.0));
}

TEST(Simulate, TimeVaryingIntensity) {
    auto m = parse_model(R"({"n": 1, "T": 2, "beta": [["0.1*x1"]], "lambda": "2*t",
        "jumps": {"type": "atoms", "atoms": [{"weight": 1, "phi": ["0.05*x1"]}]}})");
    std::vector<double> x0{1.0};
    auto ens = simulate(m, x0, 0.5, 1.5, paths(20000));
    double mean = 0.0;
    for (const auto& log : ens.jump_log) mean += static_cast<double>(log.size());
    mean /= 20000.0;
    // int_0.5^1.5 2t dt = 2
    EXPECT_NEAR(mean, 2.0, 4.0 * std::sqrt(2.0 / 20000.0));
}

TEST(Simulate, MartingaleAndPositivity) {
    for (const char* name : {"gbm1d", "merton1d", "sqrtjump1d", "gbm2d", "cev2d"}) {
        auto m = fixture(name);
        std::vector<double> x0(m.dimension(), 1.0);
        auto ens = simulate(m, x0, 0.0, 1.0, paths(10000));
        for (std::size_t i = 0; i < m.dimension(); ++i) {
            double mean = 0.0, sq = 0.0;
            for (std::size_t p = 0; p < ens.n_paths; ++p) {
                double v = ens.path(p)[i];
                EXPECT_GT(v, 0.0);
                mean += v;
                sq += v * v;
            }
            mean /= 10000.0;
            double se = std::sqrt((sq / 10000.0 - mean * mean) / 9999.0);
            EXPECT_LT(std::abs(mean - 1.0), 4 * se) << name << " component " << i;
        }
    }
}

TEST(Simulate, ClampBudgetExceeded) {
    auto m = parse_model(R"({"n": 1, "T": 1, "beta": [["1"]], "lambda": "0"})");
    std::vector<double> x0{0.01};
    EXPECT_THROW(simulate(m, x0, 0.0, 1.0, paths(200)), SimulationError);
}

TEST(PriceMc, AffinePayoff) {
    auto m = fixture("merton1d");
    std::vector<double> x{1.2};
    auto e = price_mc(m, parse("2*x1 + 1", 1), x, 0.0, 1.0, paths(20000));
    EXPECT_LT(std::abs(e.mean - 3.4), 3 * e.std_error);
}

TEST(PriceMc, BlackScholes) {
    auto m = fixture("gbm1d");
    std::vector<double> x{1.0};
    auto e = price_mc(m, parse("max(x1 - 1, 0)", 1), x, 0.0, 1.0, paths(40000));
    EXPECT_LT(std::abs(e.mean - bs_oracle(1, 1, 0.2, 1)), 3 * e.std_error);
}

TEST(PriceMc, Merton) {
    auto m = fixture("merton1d");
    std::vector<double> x{1.0};
    auto e = price_mc(m, parse("max(x1 - 1, 0)", 1), x, 0.0, 1.0, paths(40000));
    EXPECT_LT(std::abs(e.mean - merton_oracle(0.2, 1, 0.1, 1, 1, 1)), 3 * e.std_error);
}

TEST(PriceMc, StderrScaling) {
    auto m = fixture("merton1d");
    std::vector<double> x{1.0};
    auto g = parse("max(x1 - 1, 0)", 1);
    auto a = price_mc(m, g, x, 0.0, 1.0, paths(5000));
    auto b = price_mc(m, g, x, 0.0, 1.0, paths(20000, 2));
    EXPECT_NEAR(b.std_error / a.std_error, 0.5, 0.05);
}

TEST(ClosedForm, NoCoefficientsIsIdentity) {
    auto m = parse_model(R"({"n": 1, "T": 1, "beta": [["0*x1"]], "lambda": "0"})");
    std::vector<double> x0{1.7};
    auto ens = simulate_linear_closed_form(m, x0, 0.0, 1.0, paths(50));
    for (double v : ens.terminal) EXPECT_EQ(v, 1.7);
}

TEST(ClosedForm, ExactHomogeneity) {
    for (const char* name : {"merton1d", "gbm2d"}) {
        auto m = fixture(name);
        std::vector<double> x0(m.dimension(), 1.3), x1(m.dimension(), 2.6);
        auto a = simulate_linear_closed_form(m, x0, 0.0, 1.0, paths(1000, 9));
        auto b = simulate_linear_closed_form(m, x1, 0.0, 1.0, paths(1000, 9));
        for (std::size_t k = 0; k < a.terminal.size(); ++k) ASSERT_EQ(2.0 * a.terminal[k], b.terminal[k]);
    }
}

TEST(ClosedForm, RefusesNonlinearModels) {
    std::vector<double> x0{1.0};
    EXPECT_THROW(simulate_linear_closed_form(fixture("sqrtjump1d"), x0, 0.0, 1.0, paths(10)), ModelError);
}

TEST(ClosedForm, MatchesEulerInDistribution) {
    auto m = fixture("merton1d");
    std::vector<double> x0{1.0};
    auto o = paths(10000, 3);
    auto cf = simulate_linear_closed_form(m, x0, 0.0, 1.0, o);
    o.seed = 4;
    auto eu = simulate(m, x0, 0.0, 1.0, o);
    // 1% two-sample critical value sqrt(-ln(0.005)/2) * sqrt(2/n)
    double crit = std::sqrt(-std::log(0.005) / 2.0) * std::sqrt(2.0 / 10000.0);
    EXPECT_LT(ks_statistic(cf.terminal, eu.terminal), crit);
}

TEST(ClosedForm, MartingaleAndCallPrice) {
    auto m = fixture("merton1d");
    std::vector<double> x0{1.0};
    auto ens = simulate_linear_closed_form(m, x0, 0.0, 1.0, paths(40000));
    auto e = estimate(ens, parse("max(x1 - 1, 0)", 1));
    EXPECT_LT(std::abs(e.mean - merton_oracle(0.2, 1, 0.1, 1, 1, 1)), 3 * e.std_error);
    auto mean = estimate(ens, parse("x1", 1));
    EXPECT_LT(std::abs(mean.mean - 1.0), 4 * mean.std_error);
}
