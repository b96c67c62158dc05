#include <gtest/gtest.h>

#include <cmath>

#include "jdconvex/errors.hpp"
#include "jdconvex/io.hpp"
#include "jdconvex/model.hpp"

using namespace jdconvex;

namespace {

ModelSpec model1d(const std::string& beta, const std::string& lambda, const std::string& jumps) {
    std::string doc = R"({"n": 1, "T": 1, "beta": [[")" + beta + R"("]], "lambda": ")" + lambda + "\"";
    if (!jumps.empty()) doc += ", \"jumps\": " + jumps;
    return parse_model(doc + "}");
}

std::string atom(const std::string& phi) { return R"({"type": "atoms", "atoms": [{"weight": 1, "phi": [")" + phi + "\"]}]}"; }

}  // namespace

TEST(Validate, GbmPasses) {
    auto m = model1d("0.2*x1", "1", atom("0.1*x1"));
    auto r = validate(m, Box::cube(1, 0.5, 2.0));
    EXPECT_TRUE(r.ok());
    for (const char* id : {"A3", "A4", "A5", "A7", "lambda"}) EXPECT_EQ(r.find(id)->verdict, Verdict::Pass) << id;
    for (const char* id : {"A1", "A2", "A6"}) EXPECT_EQ(r.find(id)->verdict, Verdict::NotCheckable) << id;
    // |beta|^2 + |phi|^2 = (0.04 + 0.01) x^2
    EXPECT_NEAR(r.growth_constant, 0.05, 1e-15);
    EXPECT_NEAR(r.gamma, 0.1, 1e-15);
    EXPECT_TRUE(r.warnings.empty());
}

TEST(Validate, NegativeJumpBreaksA7) {
    auto m = model1d("0.2*x1", "1", atom("-2*x1"));
    auto r = validate(m, Box::cube(1, 0.5, 2.0));
    const auto* c = r.find("A7");
    ASSERT_EQ(c->verdict, Verdict::Fail);
    ASSERT_TRUE(c->witness);
    EXPECT_DOUBLE_EQ(c->witness->value, -1.0);
    EXPECT_EQ(c->witness->component, 0u);
}

TEST(Validate, SingularBetaBreaksA5) {
    auto m = parse_model(R"({"n": 2, "T": 1, "beta": [["0.2*x1", "0"], ["0", "0"]], "lambda": "0"})");
    auto r = validate(m, Box::cube(2, 0.5, 2.0));
    const auto* c = r.find("A5");
    ASSERT_EQ(c->verdict, Verdict::Fail);
    ASSERT_TRUE(c->witness);
    EXPECT_EQ(c->witness->value, 0.0);
}

TEST(Validate, ZeroAtomWarnsOnly) {
    auto m = model1d("0.2*x1", "1", "");
    auto r = validate(m, Box::cube(1, 0.5, 2.0));
    EXPECT_TRUE(r.ok());
    EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Validate, DomainFailureIsReported) {
    auto m = model1d("0.2*sqrt(x1 - 1)", "0", "");
    auto r = validate(m, Box::cube(1, 0.5, 2.0));
    EXPECT_FALSE(r.ok());
    ASSERT_NE(r.find("domain"), nullptr);
    EXPECT_TRUE(r.find("domain")->witness);
}

TEST(Validate, NegativeIntensity) {
    auto m = model1d("0.2*x1", "t - 0.5", atom("0.1*x1"));
    auto r = validate(m, Box::cube(1, 0.5, 2.0));
    EXPECT_EQ(r.find("lambda")->verdict, Verdict::Fail);
}

TEST(Model, ConstructionErrors) {
    EXPECT_THROW(parse_model(R"({"n": 1, "T": 1, "beta": [["0.2*z"]], "lambda": "0"})"), SchemaError);
    EXPECT_THROW(parse_model(R"({"n": 1, "T": 1, "beta": [["0.2*x1"]], "lambda": "x1"})"), SchemaError);
    EXPECT_THROW(parse_model(
                     R"({"n": 1, "T": 1, "beta": [["x1"]], "lambda": "1", "jumps": {"type": "atoms", "atoms": [{"weight": 1, "phi": ["z"]}]}})"),
                 SchemaError);
    std::vector<CoeffExpr> beta{parse("x1", 1)};
    AtomJumps a{{{0.5, {parse("x1", 1)}}, {0.4, {parse("x1", 1)}}}};
    EXPECT_THROW(ModelSpec(1, 1.0, beta, parse("1", 1), a), ModelError);
}

TEST(CompensatorDrift, Values) {
    std::vector<double> x{10.0};
    EXPECT_EQ(compensator_drift(model1d("0.2*x1", "0", atom("0.1*x1")), x, 0.0)[0], 0.0);
    // -lambda * gamma * x
    EXPECT_DOUBLE_EQ(compensator_drift(model1d("0.2*x1", "2", atom("0.1*x1")), x, 0.0)[0], -2.0);
    auto two = model1d("0.2*x1", "2",
                       R"({"type": "atoms", "atoms": [{"weight": 0.5, "phi": ["0.1*x1"]}, {"weight": 0.5, "phi": ["-0.05*x1"]}]})");
    EXPECT_DOUBLE_EQ(compensator_drift(two, x, 0.0)[0], -2.0 * (0.5 * 1.0 - 0.5 * 0.5));
}

TEST(CompensatorDrift, DensityExactForLinearInZ) {
    // int_0^1 (1 + 2 z) x dz = 2 x
    for (int nz : {1, 3, 64}) {
        auto m = model1d("0.2*x1", "1", R"({"type": "density", "n_z": )" + std::to_string(nz) + R"(, "phi": ["(1 + 2*z)*0.1*x1"]})");
        std::vector<double> x{3.0};
        EXPECT_NEAR(compensator_drift(m, x, 0.0)[0], -0.6, 1e-15) << nz;
    }
}

TEST(Volatility, Jump) {
    std::vector<double> x{2.7};
    EXPECT_NEAR(jump_volatility(model1d("0.2*x1", "1", atom("0.3*x1")), 0, x, 0.0), 0.3, 1e-15);
    EXPECT_EQ(jump_volatility(model1d("0.2*x1", "0", atom("0.3*x1")), 0, x, 0.0), 0.0);
    std::vector<double> four{4.0};
    // 2 * sqrt(4) / 4
    EXPECT_DOUBLE_EQ(jump_volatility(model1d("0.2*x1", "2", atom("sqrt(x1)")), 0, four, 0.0), 1.0);
}

TEST(Volatility, Diffusion) {
    auto m = parse_model(R"({"n": 2, "T": 1, "beta": [["0.2*x1", "0"], ["0", "0.3*x2"]], "lambda": "0"})");
    std::vector<double> x{1.7, 0.4};
    EXPECT_NEAR(diffusion_volatility(m, 0, x, 0.0), 0.2, 1e-15);
    EXPECT_NEAR(diffusion_volatility(m, 1, x, 0.0), 0.3, 1e-15);
    std::vector<double> four{4.0};
    EXPECT_DOUBLE_EQ(diffusion_volatility(model1d("0.2*sqrt(x1)", "0", ""), 0, four, 0.0), 0.1);
    EXPECT_EQ(diffusion_volatility(model1d("0", "0", ""), 0, four, 0.0), 0.0);
}

TEST(Volatility, ConstantForLinearModels) {
    auto m = parse_model(R"({"n": 2, "T": 1, "beta": [["0.2*x1", "0.1*x1"], ["0", "0.3*x2"]], "lambda": "1 + t",
        "jumps": {"type": "density", "n_z": 16, "phi": ["(z - 0.3)*x1", "0.2*z*x2"]}})");
    std::vector<double> x{0.6, 1.9}, y{1.8, 0.7};
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_LT(std::abs(jump_volatility(m, i, x, 0.4) - jump_volatility(m, i, y, 0.4)), 1e-12);
        EXPECT_LT(std::abs(diffusion_volatility(m, i, x, 0.4) - diffusion_volatility(m, i, y, 0.4)), 1e-12);
    }
    EXPECT_TRUE(is_linear(m, Box::cube(2, 0.5, 2.0), 1));
    EXPECT_FALSE(is_linear(model1d("0.2*x1", "1", atom("sqrt(x1)")), Box::cube(1, 0.5, 2.0), 1));
    EXPECT_FALSE(is_linear(model1d("0.2*x1^0.75", "1", atom("0.1*x1")), Box::cube(1, 0.5, 2.0), 1));
}

TEST(Atoms, LabelsSelectAtoms) {
    auto m = model1d("0.2*x1", "1",
                     R"({"type": "atoms", "atoms": [{"weight": 0.25, "phi": ["0.1*x1"]}, {"weight": 0.75, "phi": ["-0.2*x1"]}]})");
    std::vector<double> x{2.0}, out(1);
    m.phi_at(x, 0.0, 0.1, out);
    EXPECT_DOUBLE_EQ(out[0], 0.2);
    m.phi_at(x, 0.0, 0.3, out);
    EXPECT_DOUBLE_EQ(out[0], -0.4);
    ASSERT_EQ(m.jump_nodes().size(), 2u);
    EXPECT_EQ(m.jump_nodes()[1].weight, 0.75);
}
