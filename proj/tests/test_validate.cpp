#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ebsvie/crossval.hpp"
#include "ebsvie/errors.hpp"
#include "ebsvie/mc_solver.hpp"
#include "ebsvie/oracle.hpp"
#include "ebsvie/paths.hpp"
#include "ebsvie/pde.hpp"
#include "ebsvie/probes.hpp"
#include "ebsvie/problem_io.hpp"

using namespace ebsvie;

TEST(Oracle, ZeroGeneratorCopiesPsi) {
    ProblemSpec s = catalog::deterministic_linear(0.0, 0.0);
    s.generator = {};
    const DeterministicField f = deterministic_oracle(s, 1000);
    for (int k = 0; k <= 1000; k += 50) {
        for (int i = 0; i <= k; i += 25) EXPECT_DOUBLE_EQ(f.at(i, k), 1.0 + 0.5 * f.grid().node(i));
    }
}

TEST(Oracle, DiagonalVolterraClosedForm) {
    const double beta = 0.5, psi0 = 1.2;
    const ProblemSpec s = catalog::diagonal_volterra(beta, psi0);
    const DeterministicField f = deterministic_oracle(s, 1000);
    const DeterministicField g = deterministic_oracle(s, 2000);
    double err = 0.0, self = 0.0;
    for (int k = 0; k <= 1000; ++k) {
        for (int i = 0; i <= k; ++i) {
            err = std::max(err, std::abs(f.at(i, k) - psi0 * std::exp(beta * (1.0 - f.grid().node(k)))));
            self = std::max(self, std::abs(f.at(i, k) - g.at(2 * i, 2 * k)));
        }
    }
    EXPECT_LE(err, 1e-6);
    EXPECT_LE(self, 1e-6);
}

TEST(Oracle, SelfConsistentOnCatalog) {
    for (const char* name : {"deterministic_linear", "diagonal_volterra", "tanh_product"}) {
        const ProblemSpec s = catalog::by_name(name);
        const DeterministicField f = deterministic_oracle(s, 1000);
        const DeterministicField g = deterministic_oracle(s, 2000);
        double self = 0.0;
        for (int k = 0; k <= 1000; ++k) {
            for (int i = 0; i <= k; ++i) self = std::max(self, std::abs(f.at(i, k) - g.at(2 * i, 2 * k)));
        }
        EXPECT_LE(self, 1e-6) << name;
    }
}

TEST(Oracle, RichardsonOnTanhProduct) {
    const ProblemSpec s = catalog::tanh_product();
    const RichardsonValue r = richardson_oracle(s, 0.0, 0.0);
    ASSERT_EQ(r.values.size(), 3u);
    // Second order: successive differences shrink fourfold.
    const double q = (r.values[0] - r.values[1]) / (r.values[1] - r.values[2]);
    EXPECT_NEAR(q, 4.0, 0.2);
    EXPECT_LE(std::abs(r.extrapolated - r.values[2]), 1e-6);

    // The first-order regression sweep approaches the pinned value.
    double err[2];
    int n = 0;
    for (int steps : {100, 200}) {
        const PathEnsemble ens = simulate_paths(s, make_grid(1.0, steps), {0.0, {0.0}}, 4, 1);
        err[n++] = std::abs(solve_ebsvie_regression(s, ens, {}).y_stats(0, 0).mean[0] - r.extrapolated);
    }
    EXPECT_LE(err[1], 0.01);
    EXPECT_NEAR(err[0] / err[1], 2.0, 0.25);
}

TEST(Oracle, PreconditionsEnforced) {
    EXPECT_THROW(deterministic_oracle(catalog::heat_quadratic(), 1000), ArgumentError);
    EXPECT_THROW(deterministic_oracle(catalog::deterministic_linear(), 999), ArgumentError);
}

TEST(CrossVal, DefaultPointsCoverTriangleInterior) {
    const TimeGrid grid = make_grid(1.0, 200);
    const SpatialMesh mesh(-6, 6, 400);
    const auto pts = default_sample_points(grid, mesh);
    ASSERT_EQ(pts.size(), 20u);
    for (const auto& p : pts) {
        EXPECT_LE(p.t, p.s);
        EXPECT_LT(p.s, 1.0);
        EXPECT_GE(grid.index_of(p.t), 0);
        EXPECT_GE(grid.index_of(p.s), 0);
        EXPECT_LE(std::abs(p.x), 3.0);
    }
}

TEST(CrossVal, LinearPayoffIsExact) {
    const TimeGrid grid = make_grid(1.0, 50);
    const SpatialMesh mesh(-6, 6, 200);
    McParams mc;
    mc.n_paths = 5000;
    const CrossValReport r = cross_validate(catalog::heat_linear(), grid, mesh, {{0.2, 0.5, 1.0}}, mc, {}, 0.0);
    ASSERT_EQ(r.points.size(), 1u);
    EXPECT_NEAR(r.points[0].theta_pde, 1.0, 1e-12);
    EXPECT_LE(std::abs(r.points[0].theta_mc - 1.0), 3 * r.points[0].se + 1e-12);
    EXPECT_TRUE(r.points[0].pass);
}

TEST(CrossVal, QuadraticPayoffPoint) {
    const TimeGrid grid = make_grid(1.0, 100);
    const SpatialMesh mesh(-6, 6, 400);
    McParams mc;
    mc.n_paths = 20000;
    const double c = calibrate_budget(grid, mesh);
    const CrossValReport r = cross_validate(catalog::heat_quadratic(), grid, mesh, {{0.2, 0.5, 1.0}}, mc, {}, c);
    EXPECT_NEAR(r.points[0].theta_mc, 1.5, 1e-3);
    EXPECT_NEAR(r.points[0].theta_pde, 1.5, 1e-3);
    EXPECT_TRUE(r.points[0].pass);
}

TEST(CrossVal, DeterministicInstanceMatchesOracle) {
    const ProblemSpec s = catalog::deterministic_linear();
    const TimeGrid grid = make_grid(1.0, 100);
    const SpatialMesh mesh(-2, 2, 20);
    McParams mc;
    mc.n_paths = 4;
    const double c = calibrate_budget(grid, SpatialMesh(-6, 6, 200));
    const CrossValReport r =
        cross_validate(s, grid, mesh, {{0.2, 0.5, 0.0}, {0.0, 0.0, 0.3}, {0.6, 0.9, -0.5}}, mc, {}, c);
    const DeterministicField o = deterministic_oracle(s, 2000);
    for (const auto& p : r.points) {
        const double ref = o.value(p.point.t, p.point.s);
        EXPECT_LE(std::abs(p.theta_mc - ref), r.budget);
        EXPECT_LE(std::abs(p.theta_pde - ref), r.budget);
        EXPECT_TRUE(p.pass);
    }
}

TEST(CrossVal, BadPointsRejected) {
    const TimeGrid grid = make_grid(1.0, 10);
    const SpatialMesh mesh(-5, 5, 40);
    McParams mc;
    mc.n_paths = 10;
    const ProblemSpec s = catalog::heat_linear();
    EXPECT_THROW(cross_validate(s, grid, mesh, {{0.6, 0.5, 0.0}}, mc, {}, 0.0), ArgumentError);
    EXPECT_THROW(cross_validate(s, grid, mesh, {{0.2, 0.5, 4.5}}, mc, {}, 0.0), ArgumentError);
    EXPECT_THROW(cross_validate(s, grid, mesh, {{0.2, 0.55, 0.0}}, mc, {}, 0.0), ArgumentError);
}

TEST(CrossVal, ReportSerializes) {
    CrossValReport r;
    r.budget_constant = 0.5;
    r.budget = 0.01;
    CrossValPoint p;
    p.point = {0.1, 0.2, 0.3};
    p.pass = true;
    r.points.push_back(p);
    std::stringstream csv, js;
    write_crossval_csv(r, csv);
    write_crossval_json(r, js);
    std::string header;
    std::getline(csv, header);
    EXPECT_NE(header.find("theta_mc"), std::string::npos);
    EXPECT_NE(js.str().find("\"pass\""), std::string::npos);
}

TEST(Stability, ZeroGeneratorShiftsByEpsilon) {
    const ProblemSpec s = catalog::heat_quadratic();
    const PathEnsemble ens = simulate_paths(s, make_grid(1.0, 20), {0.0, {0.0}}, 1000, 2);
    const StabilityReport r = stability_probe(s, ens, {0.0, 1e-3, 1e-2, 1e-1}, {});
    ASSERT_EQ(r.rows.size(), 4u);
    EXPECT_EQ(r.rows[0].difference, 0.0);
    for (std::size_t j = 1; j < 4; ++j) EXPECT_NEAR(r.rows[j].difference, r.rows[j].eps, 1e-12 * r.rows[j].eps + 1e-15);
    EXPECT_NEAR(r.slope, 1.0, 1e-9);
    EXPECT_TRUE(r.monotone);
}

TEST(Stability, LinearGeneratorAmplifies) {
    const double a = 0.5;
    ProblemSpec s = catalog::deterministic_linear(a, 0.0);
    const int n = 200;
    const PathEnsemble ens = simulate_paths(s, make_grid(1.0, n), {0.0, {0.0}}, 4, 2);
    const StabilityReport r = stability_probe(s, ens, {1e-3, 1e-2}, {});
    for (const auto& row : r.rows) EXPECT_NEAR(row.difference / row.eps, std::exp(a), 5e-3);
    EXPECT_NEAR(r.slope, 1.0, 1e-6);
}

TEST(Continuity, ConstantFieldHasNoVariation) {
    const ProblemSpec s = catalog::constant(1.5);
    const PathEnsemble ens = simulate_paths(s, make_grid(1.0, 20), {0.0, {0.0}}, 100, 2);
    const ContinuityReport r = continuity_probe(solve_ebsvie_regression(s, ens, {}));
    EXPECT_EQ(r.diagonal_modulus, 0.0);
    EXPECT_EQ(r.label_modulus, 0.0);
    EXPECT_DOUBLE_EQ(r.dt, 0.05);
    EXPECT_DOUBLE_EQ(r.rho_dt, 0.05);
}

TEST(Continuity, TimeFreeDataHaveNoLabelVariation) {
    const ProblemSpec s = catalog::heat_quadratic();
    const PathEnsemble ens = simulate_paths(s, make_grid(1.0, 20), {0.0, {0.0}}, 1000, 2);
    EXPECT_EQ(continuity_probe(solve_ebsvie_regression(s, ens, {})).label_modulus, 0.0);
}

TEST(Adaptedness, CatalogAtMidStart) {
    for (const auto& name : catalog::names()) {
        const ProblemSpec s = catalog::by_name(name);
        const PathEnsemble ens = simulate_paths(s, make_grid(1.0, 20), {0.5, {0.2}}, 500, 2);
        const AdaptednessReport r = adaptedness_probe(solve_ebsvie_regression(s, ens, {}), 0.5);
        EXPECT_TRUE(r.passed) << name;
        EXPECT_GT(r.cells_checked, 0) << name;
    }
}

TEST(Adaptedness, StartAtZeroIsVacuous) {
    const ProblemSpec s = catalog::nonlinear_ou();
    const PathEnsemble ens = simulate_paths(s, make_grid(1.0, 20), {0.0, {0.2}}, 500, 2);
    const AdaptednessReport r = adaptedness_probe(solve_ebsvie_regression(s, ens, {}), 0.0);
    EXPECT_TRUE(r.passed);
    EXPECT_EQ(r.cells_checked, 0);
}

TEST(Adaptedness, CorruptedFieldIsNamed) {
    const ProblemSpec s = catalog::constant(1.0);
    const PathEnsemble ens = simulate_paths(s, make_grid(1.0, 10), {0.5, {0.0}}, 20, 2);
    TwoTimeField f = TwoTimeField::explicit_values(ens, 1);
    for (const auto& [i, k] : TriangularIndex(10).sweep_order()) {
        for (double& v : f.explicit_y(i, k)) v = 1.0;
        if (k < 10) {
            for (double& v : f.explicit_z(i, k)) v = 0.0;
        }
    }
    ASSERT_TRUE(adaptedness_probe(f, 0.5).passed);
    f.explicit_y(1, 3)[7] = 1.0 + 1e-12;
    const AdaptednessReport r = adaptedness_probe(f, 0.5);
    EXPECT_FALSE(r.passed);
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_NE(r.violations[0].find("(1,3)"), std::string::npos) << r.violations[0];
}
