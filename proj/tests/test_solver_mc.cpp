#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ebsvie/basis.hpp"
#include "ebsvie/errors.hpp"
#include "ebsvie/mc_solver.hpp"
#include "ebsvie/paths.hpp"
#include "ebsvie/problem_io.hpp"

using namespace ebsvie;

namespace {

double max_gap(const TwoTimeField& a, const TwoTimeField& b) {
    double worst = 0.0;
    for (const auto& [i, k] : TriangularIndex(a.n_steps()).sweep_order()) {
        const auto ya = a.y_values(i, k), yb = b.y_values(i, k);
        for (std::size_t p = 0; p < ya.size(); ++p) worst = std::max(worst, std::abs(ya[p] - yb[p]));
    }
    return worst;
}

ProblemSpec deterministic(double a, double beta, double psi0, double psi1) {
    ProblemSpec s = catalog::deterministic_linear(a, beta);
    s.free_term = {FreeTermFamily::AffineT, {psi0, psi1}};
    return s;
}

double sup_error(const ProblemSpec& spec, int n, auto exact) {
    const TimeGrid grid = make_grid(1.0, n);
    const PathEnsemble ens = simulate_paths(spec, grid, {0.0, {0.0}}, 4, 1);
    const TwoTimeField f = solve_ebsvie_regression(spec, ens, {});
    double worst = 0.0;
    for (const auto& [i, k] : TriangularIndex(n).sweep_order()) {
        worst = std::max(worst, std::abs(f.y_stats(i, k).mean[0] - exact(grid.node(i), grid.node(k))));
    }
    return worst;
}

}  // namespace

TEST(Basis, ConstantCoordinateDropped) {
    const std::vector<double> states(40, 2.76);
    const PolynomialBasis b = PolynomialBasis::fit(states, 40, 1, 4);
    EXPECT_EQ(b.size(), 1);
    std::vector<double> noisy{0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
    EXPECT_EQ(PolynomialBasis::fit(noisy, 6, 1, 3).size(), 4);
}

TEST(Basis, TotalDegreeCount) {
    std::vector<double> states;
    for (int p = 0; p < 50; ++p) {
        states.push_back(std::sin(p));
        states.push_back(std::cos(3 * p));
    }
    EXPECT_EQ(PolynomialBasis::fit(states, 50, 2, 3).size(), 10);
}

TEST(Basis, ProjectionReproducesPolynomials) {
    std::vector<double> states(500);
    for (std::size_t p = 0; p < states.size(); ++p) states[p] = -2.0 + 4.0 * p / 499.0;
    const PolynomialBasis b = PolynomialBasis::fit(states, 500, 1, 4);
    const LeastSquaresProjector proj(b, states, 500, "test");
    Eigen::MatrixXd target(500, 2);
    for (int p = 0; p < 500; ++p) {
        const double x = states[static_cast<std::size_t>(p)];
        target(p, 0) = 1 - 2 * x + 0.5 * x * x * x;
        target(p, 1) = 3.0;
    }
    const Eigen::MatrixXd c = proj.project(target);
    const Eigen::VectorXd fitted = proj.design() * c.col(0);
    EXPECT_LE((fitted - target.col(0)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_EQ(c(0, 1), 3.0);
    for (int j = 1; j < c.rows(); ++j) EXPECT_EQ(c(j, 1), 0.0);
}

TEST(Basis, RankDeficientDesignRejected) {
    // Two distinct states cannot support a quartic.
    std::vector<double> states(100);
    for (std::size_t p = 0; p < 100; ++p) states[p] = p % 2 ? 1.0 : -1.0;
    const PolynomialBasis b = PolynomialBasis::fit(states, 100, 1, 4);
    EXPECT_THROW(LeastSquaresProjector(b, states, 100, "level 3"), SolverError);
}

TEST(Regression, ConstantPropagatesExactly) {
    const ProblemSpec spec = catalog::constant(2.5);
    const PathEnsemble ens = simulate_paths(spec, make_grid(1.0, 30), {0.0, {0.1}}, 500, 2);
    const TwoTimeField f = solve_ebsvie_regression(spec, ens, {});
    for (const auto& [i, k] : TriangularIndex(30).sweep_order()) {
        for (double v : f.y_values(i, k)) ASSERT_EQ(v, 2.5);
        if (k < 30) {
            for (double v : f.z_values(i, k)) ASSERT_EQ(v, 0.0);
        }
    }
}

TEST(Regression, LinearOdeFirstOrder) {
    const double a = -0.7;
    const ProblemSpec spec = deterministic(a, 0.0, 1.0, 0.5);
    auto exact = [a](double t, double s) { return (1.0 + 0.5 * t) * std::exp(a * (1.0 - s)); };
    const double e50 = sup_error(spec, 50, exact), e100 = sup_error(spec, 100, exact);
    EXPECT_LE(e100, 0.01);
    EXPECT_NEAR(e50 / e100, 2.0, 0.2);
}

TEST(Regression, DiagonalVolterraFirstOrder) {
    const double beta = 0.5, psi0 = 1.3;
    const ProblemSpec spec = catalog::diagonal_volterra(beta, psi0);
    auto exact = [&](double, double s) { return psi0 * std::exp(beta * (1.0 - s)); };
    const double e50 = sup_error(spec, 50, exact), e100 = sup_error(spec, 100, exact);
    EXPECT_LE(e100, 0.01);
    EXPECT_NEAR(e50 / e100, 2.0, 0.2);
}

TEST(Regression, LabelOrderAndThreadsDoNotMatter) {
    const ProblemSpec spec = catalog::nonlinear_ou();
    const PathEnsemble ens = simulate_paths(spec, make_grid(1.0, 20), {0.0, {0.2}}, 2000, 5);
    const TwoTimeField ref = solve_ebsvie_regression(spec, ens, {});
    SolverOptions shuffled;
    shuffled.label_order_seed = 77;
    shuffled.threads = 3;
    EXPECT_EQ(max_gap(ref, solve_ebsvie_regression(spec, ens, {}, shuffled)), 0.0);
}

TEST(Regression, LabelSubsetMatchesFullSweep) {
    const ProblemSpec spec = catalog::nonlinear_ou();
    const PathEnsemble ens = simulate_paths(spec, make_grid(1.0, 20), {0.0, {0.2}}, 2000, 5);
    const TwoTimeField full = solve_ebsvie_regression(spec, ens, {});
    SolverOptions so;
    so.labels = {4};
    const TwoTimeField part = solve_ebsvie_regression(spec, ens, {}, so);
    EXPECT_FALSE(part.has_cell(3, 10));
    for (int k = 4; k <= 20; ++k) {
        EXPECT_EQ(part.y_values(4, k), full.y_values(4, k));
        EXPECT_EQ(part.diagonal(k), full.diagonal(k));
    }
}

TEST(Regression, ZeroDiagonalSlotDecouplesBsdeFamily) {
    const ProblemSpec spec = catalog::heat_quadratic();
    const PathEnsemble ens = simulate_paths(spec, make_grid(1.0, 20), {0.0, {0.0}}, 1000, 5);
    SolverOptions so;
    so.zero_diagonal_slot = true;
    EXPECT_EQ(max_gap(solve_ebsvie_regression(spec, ens, {}), solve_ebsvie_regression(spec, ens, {}, so)), 0.0);
}

TEST(FieldAccess, ConstantStatsAndTerminalLevel) {
    const ProblemSpec spec = catalog::constant(1.5);
    const PathEnsemble ens = simulate_paths(spec, make_grid(1.0, 10), {0.0, {0.0}}, 300, 2);
    const TwoTimeField f = solve_ebsvie_regression(spec, ens, {});
    const FieldSample s = evaluate_field_at(f, 2, 6);
    EXPECT_EQ(s.mean[0], 1.5);
    EXPECT_EQ(s.se[0], 0.0);

    const ProblemSpec heat = catalog::heat_quadratic();
    const PathEnsemble hens = simulate_paths(heat, make_grid(1.0, 10), {0.0, {0.0}}, 300, 2);
    const TwoTimeField h = solve_ebsvie_regression(heat, hens, {});
    double mean = 0.0;
    for (std::size_t p = 0; p < 300; ++p) mean += std::pow(hens.x(p, 10)[0], 2);
    EXPECT_NEAR(evaluate_field_at(h, 3, 10).mean[0], mean / 300, 1e-13);
    for (int k = 0; k <= 10; ++k) EXPECT_EQ(h.diagonal(k), h.y_values(k, k));
}

TEST(FieldAccess, OutsideTriangleRejected) {
    const ProblemSpec spec = catalog::constant(1.5);
    const PathEnsemble ens = simulate_paths(spec, make_grid(1.0, 10), {0.0, {0.0}}, 10, 2);
    const TwoTimeField f = solve_ebsvie_regression(spec, ens, {});
    EXPECT_THROW(evaluate_field_at(f, 5, 4), ArgumentError);
}

TEST(Picard, ZeroGeneratorStopsAtOnce) {
    const ProblemSpec spec = catalog::heat_quadratic();
    const PathEnsemble ens = simulate_paths(spec, make_grid(1.0, 50), {0.0, {0.0}}, 1000, 3);
    const PicardResult r = picard_solve(spec, ens, 0.0, 1.0, {});
    EXPECT_TRUE(r.diagnostics.converged);
    EXPECT_EQ(r.diagnostics.iterations, 1);
    EXPECT_EQ(r.diagnostics.residuals.front(), 0.0);
}

TEST(Picard, DeterministicWindowContracts) {
    const ProblemSpec spec = catalog::diagonal_volterra(1.0, 1.0);
    const PathEnsemble ens = simulate_paths(spec, make_grid(1.0, 100), {0.0, {0.0}}, 4, 1);
    PicardOptions po;
    po.tol = 0.0;
    const PicardResult r = picard_solve(spec, ens, 0.9, 1.0, {}, po);
    ASSERT_GE(r.diagnostics.ratios.size(), 3u);
    for (double q : r.diagnostics.ratios) EXPECT_LE(q, 0.2);
    // Geometric or faster: the log residuals fall at least linearly.
    EXPECT_LT(r.diagnostics.fitted_ratio, 0.2);

    const TwoTimeField direct = solve_ebsvie_regression(spec, ens, {});
    for (int k = 90; k <= 100; ++k) {
        for (int i = 90; i <= k; ++i) {
            EXPECT_NEAR(r.field.y_stats(i, k).mean[0], direct.y_stats(i, k).mean[0], 1e-10);
        }
    }
}

TEST(Picard, RestartFromFixedPoint) {
    const ProblemSpec spec = catalog::nonlinear_ou();
    const PathEnsemble ens = simulate_paths(spec, make_grid(1.0, 40), {0.0, {0.0}}, 2000, 3);
    const PicardResult first = picard_solve(spec, ens, 0.8, 1.0, {});
    ASSERT_TRUE(first.diagnostics.converged);
    PicardOptions po;
    po.initial = &first.field;
    const PicardResult again = picard_solve(spec, ens, 0.8, 1.0, {}, po);
    EXPECT_LE(again.diagnostics.residuals.front(), po.tol);
    EXPECT_EQ(again.diagnostics.iterations, 1);
}

TEST(Picard, NonContractionRefused) {
    const ProblemSpec spec = catalog::diagonal_volterra(40.0, 1.0);
    const PathEnsemble ens = simulate_paths(spec, make_grid(1.0, 100), {0.0, {0.0}}, 4, 1);
    PicardOptions po;
    po.tol = 0.0;
    EXPECT_THROW(picard_solve(spec, ens, 0.0, 1.0, {}, po), NonContractionError);
}

TEST(Glue, SingleWindowIsPicard) {
    const ProblemSpec spec = catalog::nonlinear_ou();
    const PathEnsemble ens = simulate_paths(spec, make_grid(1.0, 20), {0.0, {0.0}}, 1000, 3);
    EXPECT_EQ(max_gap(glue_windows(spec, ens, 1, {}), picard_solve(spec, ens, 0.0, 1.0, {}).field), 0.0);
}

TEST(Glue, MatchesDirectSweep) {
    const ProblemSpec spec = catalog::deterministic_linear(-0.5, 0.5);
    const PathEnsemble ens = simulate_paths(spec, make_grid(1.0, 100), {0.0, {0.0}}, 4, 1);
    EXPECT_LE(max_gap(glue_windows(spec, ens, 5, {}), solve_ebsvie_regression(spec, ens, {})), 1e-9);
}

TEST(Glue, ZeroGeneratorReproducesConditionalExpectation) {
    const ProblemSpec spec = catalog::heat_quadratic();
    const PathEnsemble ens = simulate_paths(spec, make_grid(1.0, 30), {0.0, {0.0}}, 2000, 3);
    EXPECT_EQ(max_gap(glue_windows(spec, ens, 3, {}), solve_ebsvie_regression(spec, ens, {})), 0.0);
}

TEST(RealizedSum, MeanTracksField) {
    const ProblemSpec spec = catalog::heat_quadratic();
    const PathEnsemble ens = simulate_paths(spec, make_grid(1.0, 40), {0.0, {0.5}}, 20000, 3);
    const TwoTimeField f = solve_ebsvie_regression(spec, ens, {});
    const auto sums = realized_backward_sum(f, 0, 0);
    const double mean = std::accumulate(sums.begin(), sums.end(), 0.0) / sums.size();
    // E[X_T^2] = x^2 + T for Brownian motion from x.
    EXPECT_NEAR(mean, 1.25, 1e-2);
    EXPECT_NEAR(f.y_stats(0, 0).mean[0], 1.25, 1e-9);
}
