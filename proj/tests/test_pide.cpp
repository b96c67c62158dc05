#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "jdconvex/errors.hpp"
#include "jdconvex/io.hpp"
#include "jdconvex/mc.hpp"
#include "jdconvex/pide.hpp"

using namespace jdconvex;

namespace {

ModelSpec fixture(const std::string& name) { return load_model(std::string(JDCONVEX_FIXTURES) + "/" + name + ".json"); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double bs_oracle(double x, double k, double s, double tau) {
    double sd = s * std::sqrt(tau);
    double d1 = (std::log(x / k) + 0.5 * sd * sd) / sd;
    return x * norm_cdf(d1) - k * norm_cdf(d1 - sd);
}

Grid grid1d(std::size_t nodes, double half_width = 2.0) {
    double c[1] = {1.0};
    std::size_t n[1] = {nodes};
    return Grid::centered(c, half_width, n);
}

Grid grid2d(std::size_t nodes, double half_width = 2.0) {
    double c[2] = {1.0, 1.0};
    std::size_t n[2] = {nodes, nodes};
    return Grid::centered(c, half_width, n);
}

Grid grid_for(const ModelSpec& m) { return m.dimension() == 1 ? grid1d(201) : grid2d(61); }

}  // namespace

TEST(Grid, Construction) {
    auto g = grid1d(11, 1.0);
    EXPECT_EQ(g.total(), 11u);
    EXPECT_EQ(g.axis(0)[5], 1.0);
    EXPECT_NEAR(g.lo(0), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(g.hi(0), std::exp(1.0), 1e-14);
    EXPECT_THROW(Grid({{1.0, 0.5, 2.0}}), Error);
    EXPECT_THROW(Grid({{0.0, 0.5, 2.0}}), Error);
    auto g2 = grid2d(5);
    EXPECT_EQ(g2.total(), 25u);
    EXPECT_EQ(g2.point(g2.flat(2, 3))[1], g2.axis(1)[3]);
}

TEST(Grid, InterpolationReproducesAffineEverywhere) {
    auto g = grid2d(9, 1.0);
    std::vector<double> u(g.total());
    for (std::size_t k = 0; k < g.total(); ++k) {
        auto x = g.point(k);
        u[k] = 3.0 - 2.0 * x[0] + 0.5 * x[1];
    }
    for (auto x : std::vector<std::vector<double>>{{1.1, 0.9}, {0.05, 0.7}, {9.0, 12.0}, {0.01, 20.0}})
        EXPECT_NEAR(g.interpolate(u, x), 3.0 - 2.0 * x[0] + 0.5 * x[1], 1e-12);
}

TEST(ApplyA, AffineAndZero) {
    auto m = fixture("cev2d");
    auto g = grid2d(21);
    std::vector<double> u(g.total());
    for (std::size_t k = 0; k < g.total(); ++k) u[k] = 2.0 * g.point(k)[0] - g.point(k)[1] + 1.0;
    for (double v : apply_A(m, g, u, 0.3)) EXPECT_LT(std::abs(v), 1e-9);
    auto z = parse_model(R"({"n": 1, "T": 1, "beta": [["0"]], "lambda": "0"})");
    auto g1 = grid1d(21);
    std::vector<double> q(g1.total());
    for (std::size_t k = 0; k < q.size(); ++k) q[k] = g1.axis(0)[k] * g1.axis(0)[k];
    for (double v : apply_A(z, g1, q, 0.0)) EXPECT_EQ(v, 0.0);
}

TEST(ApplyA, Quadratic) {
    // a u'' = (sigma^2 x^2 / 2) * 2 = 0.16 at x = 2
    auto m = fixture("gbm1d");
    double c[1] = {2.0};
    std::size_t n[1] = {201};
    auto g = Grid::centered(c, 1.0, n);
    std::vector<double> u(g.total());
    for (std::size_t k = 0; k < u.size(); ++k) u[k] = g.axis(0)[k] * g.axis(0)[k];
    auto au = apply_A(m, g, u, 0.0);
    EXPECT_NEAR(au[100], 0.16, 1e-12);  // three-point second difference is exact for quadratics
}

TEST(ApplyB, AffineZeroAndQuadratic) {
    auto m = fixture("sqrtjump1d");
    auto g = grid1d(101);
    std::vector<double> u(g.total());
    for (std::size_t k = 0; k < u.size(); ++k) u[k] = 2.0 * g.axis(0)[k] + 1.0;
    for (double v : apply_B(m, g, u, 0.0)) EXPECT_LT(std::abs(v), 1e-12);

    auto off = parse_model(R"({"n": 1, "T": 1, "beta": [["0.2*x1"]], "lambda": "0",
        "jumps": {"type": "atoms", "atoms": [{"weight": 1, "phi": ["1"]}]}})");
    for (double v : apply_B(off, g, u, 0.0)) EXPECT_EQ(v, 0.0);

    // (16 - 9 - 1 * 6) = 1 at x = 3
    auto shift = parse_model(R"({"n": 1, "T": 1, "beta": [["0.2*x1"]], "lambda": "1",
        "jumps": {"type": "atoms", "atoms": [{"weight": 1, "phi": ["1"]}]}})");
    double c[1] = {3.0};
    std::size_t n[1] = {801};
    auto fine = Grid::centered(c, 1.0, n);
    std::vector<double> q(fine.total());
    for (std::size_t k = 0; k < q.size(); ++k) q[k] = fine.axis(0)[k] * fine.axis(0)[k];
    auto bq = apply_B(shift, fine, q, 0.0);
    double h = fine.axis(0)[401] - fine.axis(0)[400];
    EXPECT_NEAR(bq[400], 1.0, 4.0 * h * h * 4.0);
}

TEST(Solve, AffineInvarianceOnEveryFixture) {
    for (const char* name : {"gbm1d", "merton1d", "sqrtjump1d", "gbm2d", "cev2d"}) {
        auto m = fixture(name);
        std::string g_src = m.dimension() == 1 ? "2*x1 + 1" : "2*x1 - 0.5*x2 + 1";
        auto g = parse(g_src, m.dimension());
        auto grid = grid_for(m);
        auto sol = solve(m, g, grid, 0.0, 1.0);
        double worst = 0.0;
        for (const auto& lvl : sol.u)
            for (std::size_t k = 0; k < grid.total(); ++k) {
                auto x = grid.point(k);
                double exact = eval(g, EvalEnv{x, 0.0, std::nullopt});
                worst = std::max(worst, std::abs(lvl[k] - exact) / (1.0 + std::abs(exact)));
            }
        EXPECT_LT(worst, 1e-8) << name;
        auto rep = convexity_report(sol);
        EXPECT_TRUE(rep.pass) << name;
        EXPECT_LT(std::abs(rep.min_value), 1e-8) << name;
    }
}

TEST(Solve, TerminalLevelIsPayoff) {
    auto m = fixture("merton1d");
    auto g = parse("max(x1 - 1, 0)", 1);
    auto grid = grid1d(101);
    auto sol = solve(m, g, grid, 0.25, 1.0, {.n_time_steps = 20, .store_stride = 5});
    EXPECT_EQ(sol.times.back(), 1.0);
    EXPECT_EQ(sol.times.front(), 0.25);
    for (std::size_t k = 0; k < grid.total(); ++k) EXPECT_EQ(sol.u.back()[k], std::max(grid.axis(0)[k] - 1.0, 0.0));
    for (std::size_t l = 1; l < sol.times.size(); ++l) EXPECT_LT(sol.times[l - 1], sol.times[l]);
    for (const auto& lvl : sol.u)
        for (double v : lvl) EXPECT_TRUE(std::isfinite(v));
}

TEST(Solve, BlackScholes) {
    auto sol = solve(fixture("gbm1d"), parse("max(x1 - 1, 0)", 1), grid1d(401), 0.0, 1.0);
    double x[1] = {1.0};
    double exact = 2 * norm_cdf(0.1) - 1;
    EXPECT_LT(std::abs(sol.value_at(x) / exact - 1.0), 1e-3);
}

TEST(Solve, Merton) {
    auto sol = solve(fixture("merton1d"), parse("max(x1 - 1, 0)", 1), grid1d(401), 0.0, 1.0);
    double x[1] = {1.0};
    double exact = merton_series_price(0.2, 1, 0.1, 1, 1, 1);
    EXPECT_LT(std::abs(sol.value_at(x) / exact - 1.0), 2e-3);
}

TEST(Solve, GridConvergence) {
    double x[1] = {1.0};
    double exact = 2 * norm_cdf(0.1) - 1;
    auto g = parse("max(x1 - 1, 0)", 1);
    auto m = fixture("gbm1d");
    double prev = 0.0;
    for (std::size_t nodes : {101, 201, 401}) {
        double err = std::abs(solve(m, g, grid1d(nodes), 0.0, 1.0).value_at(x) - exact);
        if (prev > 0.0) EXPECT_GE(prev / err, 3.0) << nodes;
        prev = err;
    }
}

TEST(Solve, TwoDimensionalMarginal) {
    // Payoff in x2 only: Black-Scholes with sigma = |(0.15, 0.25)|.
    auto sol = solve(fixture("gbm2d"), parse("max(x2 - 1, 0)", 2), grid2d(81, 2.0), 0.0, 1.0);
    double x[2] = {1.0, 1.0};
    double exact = bs_oracle(1, 1, std::hypot(0.15, 0.25), 1);
    EXPECT_LT(std::abs(sol.value_at(x) / exact - 1.0), 5e-3);
}

TEST(Solve, AgreesWithMonteCarlo) {
    struct Case {
        const char* name;
        const char* payoff;
    };
    for (auto c : {Case{"gbm1d", "max(x1 - 1, 0)"}, Case{"merton1d", "max(x1 - 1, 0)"},
                   Case{"sqrtjump1d", "max(x1 - 1, 0)"}, Case{"gbm2d", "max(x1 + x2 - 2, 0)"},
                   Case{"cev2d", "max(x1 + x2 - 2, 0)"}}) {
        auto m = fixture(c.name);
        auto g = parse(c.payoff, m.dimension());
        auto grid = m.dimension() == 1 ? Grid(grid1d(401, 2.5)) : grid2d(81, 2.0);
        std::vector<double> x(m.dimension(), 1.0);
        double pde = solve(m, g, grid, 0.0, 1.0).value_at(x);
        SimulationOptions o;
        o.n_paths = 20000;
        auto e = price_mc(m, g, x, 0.0, 1.0, o);
        EXPECT_LE(std::abs(pde - e.mean), std::max(3 * e.std_error, 5e-3 * std::abs(pde))) << c.name;
    }
}

TEST(Solve, ComparisonPrinciple) {
    for (const char* name : {"merton1d", "sqrtjump1d", "gbm2d"}) {
        auto m = fixture(name);
        std::size_t n = m.dimension();
        auto lo = parse(n == 1 ? "max(x1 - 1.1, 0)" : "max(x1 + x2 - 2.2, 0)", n);
        auto hi = parse(n == 1 ? "max(x1 - 1, 0)" : "max(x1 + x2 - 2, 0)", n);
        auto grid = n == 1 ? Grid(grid1d(201)) : grid2d(41);
        auto a = solve(m, lo, grid, 0.0, 1.0);
        auto b = solve(m, hi, grid, 0.0, 1.0);
        for (std::size_t l = 0; l < a.u.size(); ++l)
            for (std::size_t k = 0; k < grid.total(); ++k) ASSERT_LE(a.u[l][k], b.u[l][k] + 1e-10) << name;
    }
}

TEST(Convexity, LinearModelsPreserve) {
    const char* payoffs_1d[] = {"max(x1 - 1, 0)", "sqrt((x1 - 1)^2 + 0.01)", "2*x1 + 1"};
    const char* payoffs_2d[] = {"max(x1 - 1, 0) + max(x2 - 1, 0)", "sqrt((x1 - 1)^2 + 0.01) + sqrt((x2 - 1)^2 + 0.01)",
                                "2*x1 - x2 + 1"};
    for (const char* name : {"gbm1d", "merton1d", "gbm2d"}) {
        auto m = fixture(name);
        for (const char* p : m.dimension() == 1 ? payoffs_1d : payoffs_2d) {
            auto sol = solve(m, parse(p, m.dimension()), grid_for(m), 0.0, 1.0);
            auto rep = convexity_report(sol);
            EXPECT_TRUE(rep.pass) << name << " " << p << " min " << rep.min_value;
        }
    }
}

TEST(Convexity, SqrtJumpsBreakConvexity) {
    auto sol = solve(fixture("sqrtjump1d"), parse("max(x1 - 1.5, 0)", 1), grid1d(201), 0.0, 1.0);
    auto rep = convexity_report(sol);
    EXPECT_FALSE(rep.pass);
    EXPECT_LT(rep.min_value, 0.0);
    ASSERT_EQ(rep.argmin_x.size(), 1u);
    // The violation sits below the strike, where the payoff is flat but x + sqrt(x) crosses it.
    EXPECT_LT(rep.argmin_x[0], 1.5);
    auto again = convexity_report(sol);
    EXPECT_EQ(again.min_value, rep.min_value);
}

TEST(Solve, StepCapRefusal) {
    auto m = parse_model(R"({"n": 1, "T": 1, "beta": [["0.2*x1"]], "lambda": "1e7",
        "jumps": {"type": "atoms", "atoms": [{"weight": 1, "phi": ["0.1*x1"]}]}})");
    EXPECT_THROW(solve(m, parse("x1", 1), grid1d(21), 0.0, 1.0), SolverError);
}

TEST(Solve, DirichletBoundaryOption) {
    auto sol = solve(fixture("gbm1d"), parse("max(x1 - 1, 0)", 1), grid1d(401, 2.5), 0.0, 1.0,
                     {.boundary = BoundaryRule::PayoffDirichlet});
    double x[1] = {1.0};
    EXPECT_LT(std::abs(sol.value_at(x) / (2 * norm_cdf(0.1) - 1) - 1.0), 1e-3);
    EXPECT_EQ(sol.u.front().front(), 0.0);
}

TEST(Solve, CsvExport) {
    auto sol = solve(fixture("gbm1d"), parse("x1", 1), grid1d(5), 0.0, 1.0, {.n_time_steps = 2});
    std::ostringstream os;
    sol.write_csv(os);
    std::string s = os.str();
    EXPECT_EQ(s.substr(0, 7), "t,x1,u\n");
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 5 * static_cast<long>(sol.times.size()));
}
