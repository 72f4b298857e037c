#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include "ebsvie/errors.hpp"
#include "ebsvie/oracle.hpp"
#include "ebsvie/paths.hpp"
#include "ebsvie/pde.hpp"
#include "ebsvie/probes.hpp"
#include "ebsvie/problem_io.hpp"

using namespace ebsvie;

namespace {

template <class F>
double interior_error(const PdeField& f, F exact, double fraction = 0.8) {
    double worst = 0.0;
    const SpatialMesh& mesh = f.mesh();
    for (const auto& [i, k] : TriangularIndex(f.n_steps()).sweep_order()) {
        for (int j = 0; j <= mesh.n_cells(); ++j) {
            const double x = mesh.node(j);
            if (!mesh.in_inner(x, fraction)) continue;
            worst = std::max(worst, std::abs(f.at(i, k, j) - exact(f.grid().node(i), f.grid().node(k), x)));
        }
    }
    return worst;
}

}  // namespace

TEST(Pde, LinearPayoffIsExact) {
    const PdeField f = solve_nonlocal_pde(catalog::heat_linear(), make_grid(1.0, 50), SpatialMesh(-6, 6, 120));
    EXPECT_LE(interior_error(f, [](double, double, double x) { return x; }), 1e-13);
}

TEST(Pde, QuadraticPayoff) {
    const PdeField f = solve_nonlocal_pde(catalog::heat_quadratic(), make_grid(1.0, 200), SpatialMesh(-6, 6, 400));
    auto exact = [](double, double s, double x) { return x * x + 1.0 - s; };
    EXPECT_LE(interior_error(f, exact, 0.5), 1e-3);
}

TEST(Pde, TerminalLayerIsPsi) {
    const ProblemSpec spec = catalog::nonlinear_ou();
    const PdeField f = solve_nonlocal_pde(spec, make_grid(1.0, 20), SpatialMesh(-4, 4, 40));
    for (int i = 0; i <= 20; ++i) {
        for (int j = 0; j <= 40; ++j) {
            const double x[] = {f.mesh().node(j)};
            double psi[1];
            spec.eval_free_term(f.grid().node(i), x, psi);
            EXPECT_EQ(f.at(i, 20, j), psi[0]);
        }
    }
}

TEST(Pde, DeterministicInstanceMatchesOracle) {
    const ProblemSpec spec = catalog::deterministic_linear(-0.5, 0.5);
    const TimeGrid grid = make_grid(1.0, 100);
    const PdeField f = solve_nonlocal_pde(spec, grid, SpatialMesh(-2, 2, 20));
    const DeterministicField o = deterministic_oracle(spec, 2000);
    double spread = 0.0, err = 0.0;
    for (const auto& [i, k] : TriangularIndex(100).sweep_order()) {
        for (int j = 0; j <= 20; ++j) {
            spread = std::max(spread, std::abs(f.at(i, k, j) - f.at(i, k, 0)));
            err = std::max(err, std::abs(f.at(i, k, j) - o.value(grid.node(i), grid.node(k))));
        }
    }
    EXPECT_EQ(spread, 0.0);
    EXPECT_LE(err, 0.01);
}

TEST(Pde, ExplicitStepRefusedWhenUnstable) {
    PdeOptions po;
    po.theta_weight = 0.0;
    try {
        solve_nonlocal_pde(catalog::heat_quadratic(), make_grid(1.0, 10), SpatialMesh(-6, 6, 400), po);
        FAIL() << "expected StabilityError";
    } catch (const StabilityError& e) {
        EXPECT_NE(std::string(e.what()).find("dt"), std::string::npos);
    }
    // Fine enough steps are accepted.
    EXPECT_NO_THROW(solve_nonlocal_pde(catalog::heat_quadratic(), make_grid(1.0, 100), SpatialMesh(-2, 2, 20), po));
}

TEST(PdeResidual, QuadraticWithinTruncation) {
    const ProblemSpec spec = catalog::heat_quadratic();
    const PdeField f = solve_nonlocal_pde(spec, make_grid(1.0, 200), SpatialMesh(-6, 6, 400));
    EXPECT_LE(pde_residual(f, spec).max_overall, 5e-3);
}

TEST(PdeResidual, ConstantFieldHasNone) {
    const ProblemSpec spec = catalog::constant(0.7);
    PdeField f(make_grid(1.0, 10), SpatialMesh(-3, 3, 30), 1, 0.5);
    for (const auto& [i, k] : TriangularIndex(10).sweep_order()) {
        for (double& v : f.layer(i, k)) v = 0.7;
    }
    EXPECT_EQ(pde_residual(f, spec).max_overall, 0.0);
}

TEST(PdeResidual, PerturbationScalesWithInverseStep) {
    const ProblemSpec spec = catalog::heat_linear();
    const TimeGrid grid = make_grid(1.0, 40);
    PdeField f = solve_nonlocal_pde(spec, grid, SpatialMesh(-6, 6, 60));
    const PdeResidual before = pde_residual(f, spec);
    const double eps = 1e-6;
    f.layer(3, 20)[30] += eps;
    const PdeResidual after = pde_residual(f, spec);
    for (std::size_t c = 0; c < after.label.size(); ++c) {
        if (after.label[c] == 3 && after.level[c] == 19) {
            EXPECT_NEAR(after.max_norm[c] - before.max_norm[c], eps / grid.dt(), 1e-3 * eps / grid.dt());
        }
    }
}

TEST(Representation, LinearPayoff) {
    const ProblemSpec spec = catalog::heat_linear();
    const TimeGrid grid = make_grid(1.0, 40);
    auto f = std::make_shared<const PdeField>(solve_nonlocal_pde(spec, grid, SpatialMesh(-8, 8, 160)));
    const PathEnsemble ens = simulate_paths(spec, grid, {0.0, {0.3}}, 200, 4);
    const TwoTimeField r = representation_from_pde(f, spec, ens);
    for (const auto& [i, k] : TriangularIndex(40).sweep_order()) {
        const auto y = r.y_values(i, k);
        for (std::size_t p = 0; p < 200; ++p) ASSERT_NEAR(y[p], ens.x(p, k)[0], 1e-12);
        if (k < 40) {
            for (double z : r.z_values(i, k)) ASSERT_NEAR(z, 1.0, 1e-12);
        }
    }
}

TEST(Representation, QuadraticZIsTwoX) {
    const ProblemSpec spec = catalog::heat_quadratic();
    const TimeGrid grid = make_grid(1.0, 100);
    auto f = std::make_shared<const PdeField>(solve_nonlocal_pde(spec, grid, SpatialMesh(-6, 6, 400)));
    const PathEnsemble ens = simulate_paths(spec, grid, {0.0, {0.2}}, 500, 4);
    const TwoTimeField r = representation_from_pde(f, spec, ens);
    double num = 0.0, den = 0.0;
    for (int k = 0; k < 100; k += 5) {
        for (int i = 0; i <= k; i += 5) {
            const auto z = r.z_values(i, k);
            for (std::size_t p = 0; p < 500; ++p) {
                const double exact = 2 * ens.x(p, k)[0];
                num += std::pow(z[p] - exact, 2);
                den += 1.0;
            }
        }
    }
    EXPECT_LE(std::sqrt(num / den), 2e-2);
}

TEST(Representation, DeterministicHasZeroZ) {
    const ProblemSpec spec = catalog::deterministic_linear();
    const TimeGrid grid = make_grid(1.0, 50);
    auto f = std::make_shared<const PdeField>(solve_nonlocal_pde(spec, grid, SpatialMesh(-2, 2, 20)));
    const PathEnsemble ens = simulate_paths(spec, grid, {0.0, {0.0}}, 10, 4);
    const TwoTimeField r = representation_from_pde(f, spec, ens);
    const DeterministicField o = deterministic_oracle(spec, 2000);
    for (const auto& [i, k] : TriangularIndex(50).sweep_order()) {
        EXPECT_NEAR(r.y_stats(i, k).mean[0], o.value(grid.node(i), grid.node(k)), 0.01);
        if (k < 50) {
            for (double z : r.z_values(i, k)) EXPECT_EQ(z, 0.0);
        }
    }
}

TEST(Pde, BinaryHeaderAndSlice) {
    const PdeField f = solve_nonlocal_pde(catalog::heat_linear(), make_grid(1.0, 4), SpatialMesh(-1, 1, 8));
    std::stringstream bin;
    export_pde_binary(f, bin);
    // header: magic + (N, J, m) + (x_min, x_max, theta), then 15 layers of 9 nodes.
    EXPECT_GE(bin.str().size(), 15u * 9u * sizeof(double));
    std::stringstream csv;
    export_pde_slice_csv(f, 1, csv);
    std::string header;
    std::getline(csv, header);
    EXPECT_EQ(header, "k,s,j,x,theta0");
    int rows = 0;
    for (std::string line; std::getline(csv, line);) ++rows;
    EXPECT_EQ(rows, 4 * 9);
}

TEST(BackwardIdentity, ResidualShrinksUnderRefinement) {
    const ProblemSpec spec = catalog::nonlinear_ou();
    double res[2];
    int q = 0;
    for (int n : {50, 100}) {
        const TimeGrid grid = make_grid(1.0, n);
        const PdeField f = solve_nonlocal_pde(spec, grid, SpatialMesh(-6, 6, 2 * n));
        const PathEnsemble ens = simulate_paths(spec, grid, {0.0, {0.0}}, 100, 9);
        res[q++] = backward_identity_residual(f, spec, ens, 50).max_residual;
    }
    EXPECT_GE(res[0] / res[1], 2.5) << res[0] << " " << res[1];
}
