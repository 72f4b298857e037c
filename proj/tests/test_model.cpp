#include <gtest/gtest.h>

#include <cmath>

#include "ebsvie/errors.hpp"
#include "ebsvie/grid.hpp"
#include "ebsvie/problem.hpp"
#include "ebsvie/problem_io.hpp"

using namespace ebsvie;

namespace {

ProblemSpec brownian(FreeTerm psi, Generator g, double lipschitz) {
    ProblemSpec s = catalog::heat_linear();
    s.free_term = std::move(psi);
    s.generator = std::move(g);
    s.lipschitz_L = lipschitz;
    return s;
}

}  // namespace

TEST(Grid, Nodes) {
    const TimeGrid a = make_grid(1.0, 4);
    ASSERT_EQ(a.nodes().size(), 5u);
    for (int k = 0; k <= 4; ++k) EXPECT_DOUBLE_EQ(a.node(k), 0.25 * k);

    const TimeGrid b = make_grid(2.0, 1);
    EXPECT_EQ(b.nodes(), (std::vector<double>{0.0, 2.0}));

    const TimeGrid c = make_grid(1.0, 50);
    EXPECT_DOUBLE_EQ(c.dt(), 0.02);
    EXPECT_EQ(c.nodes().size(), 51u);
    EXPECT_EQ(c.index_of(0.5), 25);
    EXPECT_EQ(c.index_of(0.505), -1);
    EXPECT_EQ(c.nearest_index(0.505), 25);
}

TEST(Grid, RejectsBadInput) {
    EXPECT_THROW(make_grid(1.0, 0), ArgumentError);
    EXPECT_THROW(make_grid(-1.0, 10), ArgumentError);
}

TEST(TriangularIndex, FlatLayout) {
    const TriangularIndex idx(3);
    EXPECT_EQ(idx.size(), 10u);
    std::size_t expected = 0;
    for (int k = 0; k <= 3; ++k) {
        for (int i = 0; i <= k; ++i) EXPECT_EQ(idx.flat(i, k), expected++);
    }
    EXPECT_THROW(idx.checked_flat(2, 1), ArgumentError);
    const auto order = idx.sweep_order();
    ASSERT_EQ(order.size(), 10u);
    EXPECT_EQ(order.front(), std::make_pair(0, 3));
    EXPECT_EQ(order.back(), std::make_pair(0, 0));
}

TEST(ValidateSpec, ZeroGeneratorPasses) {
    const ProblemSpec s = brownian({FreeTermFamily::Constant, {1.0}}, {}, 0.0);
    const ValidationReport r = validate_spec(s, 100, 5);
    EXPECT_TRUE(r.passed());
    EXPECT_EQ(r.sampled_lipschitz, 0.0);
}

TEST(ValidateSpec, LipschitzViolationIsNamed) {
    const ProblemSpec s =
        brownian({FreeTermFamily::Constant, {1.0}}, {GeneratorFamily::Linear, {2.0, 0.0, 0.0, 0.0, 0.0}}, 1.0);
    const ValidationReport r = validate_spec(s, 100, 5);
    EXPECT_FALSE(r.passed());
    const AssumptionCheck& c = r.check("lipschitz_gy");
    EXPECT_FALSE(c.passed);
    EXPECT_EQ(c.detail, "g_y bound exceeded: 2 > 1");
}

TEST(ValidateSpec, TanhZWithinAnalyticBound) {
    const ProblemSpec s =
        brownian({FreeTermFamily::Constant, {1.0}}, {GeneratorFamily::Composite, {0.0, 0.0, 1.0}}, 1.0);
    const ValidationReport r = validate_spec(s, 100, 9);
    EXPECT_TRUE(r.passed());
    EXPECT_LE(r.check("lipschitz_gz").worst, 1.0);
    EXPECT_GT(r.check("lipschitz_gz").worst, 0.5);
}

TEST(ValidateSpec, CatalogPasses) {
    for (const auto& name : catalog::names()) {
        const ValidationReport r = validate_spec(catalog::by_name(name), 64, 3);
        for (const auto& c : r.checks) EXPECT_TRUE(c.passed) << name << ": " << c.name << " " << c.detail;
    }
}

TEST(ValidateSpec, FalseXIndependenceFlagIsCaught) {
    ProblemSpec s = catalog::heat_quadratic();
    s.flags.x_independent = true;
    EXPECT_FALSE(validate_spec(s, 32, 1).check("x_independent").passed);
}

TEST(Classify, Reductions) {
    EXPECT_EQ(classify(catalog::heat_quadratic()), ReductionClass::BSDE_FAMILY);
    EXPECT_EQ(classify(catalog::nonlinear_ou()), ReductionClass::EBSVIE);
    EXPECT_EQ(classify(catalog::deterministic_linear()), ReductionClass::DETERMINISTIC);
    EXPECT_EQ(classify(catalog::diagonal_volterra()), ReductionClass::DETERMINISTIC);

    // g = 0.5 y' on Brownian dynamics with psi = x ignores the off-diagonal y.
    const ProblemSpec bsvie =
        brownian({FreeTermFamily::AffineX, {1.0, 0.0}}, {GeneratorFamily::Linear, {0.0, 0.5, 0.0, 0.0, 0.0}}, 0.5);
    EXPECT_EQ(classify(bsvie), ReductionClass::BSVIE);
}

TEST(Generator, AnalyticPartials) {
    const ProblemSpec s = catalog::nonlinear_ou();
    const double x[] = {0.4}, y[] = {0.3}, yp[] = {-0.7}, z[] = {1.1};
    double g[1];
    s.eval_generator(0.2, 0.6, x, y, yp, z, g);
    EXPECT_NEAR(g[0], 0.3 * std::tanh(0.3) + 0.3 * std::cos(-0.7) + 0.3 * std::tanh(1.1), 1e-15);
    const GeneratorJacobian j = s.eval_generator_grads(0.2, 0.6, x, y, yp, z);
    EXPECT_NEAR(j.gy[0], 0.3 / std::pow(std::cosh(0.3), 2), 1e-15);
    EXPECT_NEAR(j.gyp[0], 0.3 * std::sin(0.7), 1e-15);
    EXPECT_NEAR(j.gz[0], 0.3 / std::pow(std::cosh(1.1), 2), 1e-15);
    EXPECT_THROW(s.eval_generator(0.7, 0.6, x, y, yp, z, g), DomainError);
}

TEST(ProblemIo, JsonRoundTrip) {
    for (const auto& name : catalog::names()) {
        const ProblemSpec s = catalog::by_name(name);
        const std::string text = problem_to_json(s);
        const ProblemSpec back = problem_from_json(text);
        EXPECT_EQ(problem_to_json(back), text) << name;
        EXPECT_EQ(problem_hash(back), problem_hash(s)) << name;
    }
    EXPECT_NE(problem_hash(catalog::heat_linear()), problem_hash(catalog::heat_quadratic()));
}

TEST(ProblemIo, UnknownFamilyRejected) {
    std::string text = problem_to_json(catalog::heat_linear());
    const auto pos = text.find("affine_x");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 8, "cubic_x!");
    EXPECT_THROW(problem_from_json(text), LoadError);
}

TEST(ProblemIo, ParamCountChecked) {
    ProblemSpec s = catalog::nonlinear_ou();
    s.generator.params = {0.3, 0.3};
    EXPECT_THROW(s.check(), ArgumentError);
}
