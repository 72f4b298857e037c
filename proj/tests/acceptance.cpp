// Acceptance suite: one line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "ebsvie/crossval.hpp"
#include "ebsvie/mc_solver.hpp"
#include "ebsvie/oracle.hpp"
#include "ebsvie/paths.hpp"
#include "ebsvie/pde.hpp"
#include "ebsvie/plotdata.hpp"
#include "ebsvie/probes.hpp"
#include "ebsvie/problem_io.hpp"
#include "ebsvie/variational.hpp"

using namespace ebsvie;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int threads() { return 1; }

double sup_diff_exact(const TwoTimeField& f, double c) {
    double worst = 0.0;
    for (const auto& [i, k] : TriangularIndex(f.n_steps()).sweep_order()) {
        if (!f.has_cell(i, k)) continue;
        for (double v : f.y_values(i, k)) worst = std::max(worst, std::abs(v - c));
        if (k < f.n_steps()) {
            for (double v : f.z_values(i, k)) worst = std::max(worst, std::abs(v));
        }
    }
    return worst;
}

Outcome exact_reductions() {
    const ProblemSpec spec = catalog::constant(1.5);
    const TimeGrid grid = make_grid(spec.horizon, 50);
    const PathEnsemble ens = simulate_paths(spec, grid, {0.0, {0.3}}, 1000, 7);
    const TwoTimeField mc = solve_ebsvie_regression(spec, ens, {});
    const double e_mc = sup_diff_exact(mc, 1.5);
    const TwoTimeField picard = glue_windows(spec, ens, 5, {});
    const double e_picard = sup_diff_exact(picard, 1.5);
    const SpatialMesh mesh(-4.0, 4.0, 80);
    auto pde = std::make_shared<const PdeField>(solve_nonlocal_pde(spec, grid, mesh));
    const double e_pde = sup_diff_exact(representation_from_pde(pde, spec, ens), 1.5);
    const VariationalField var = solve_variational_ebsvie(spec, ens, mc, {});
    const double e_path = sup_diff_exact(pathwise_z(var, ens, spec), 1.5);
    const DeterministicField oracle = deterministic_oracle(spec, 1000, std::vector<double>{0.3});
    double e_oracle = 0.0;
    for (int k = 0; k <= 1000; ++k) {
        for (int i = 0; i <= k; ++i) e_oracle = std::max(e_oracle, std::abs(oracle.at(i, k) - 1.5));
    }
    const double worst = std::max({e_mc, e_picard, e_pde, e_path, e_oracle});
    return {worst == 0.0, fmt("max |Y-c|,|Z| over mc/picard/pde/pathwise/oracle = %.3g", worst)};
}

double sup_vs_oracle(const TwoTimeField& f, const DeterministicField& o) {
    double worst = 0.0;
    for (const auto& [i, k] : TriangularIndex(f.n_steps()).sweep_order()) {
        const double v = f.y_stats(i, k).mean[0];
        worst = std::max(worst, std::abs(v - o.value(f.grid().node(i), f.grid().node(k))));
    }
    return worst;
}

Outcome deterministic_vs_oracle() {
    const ProblemSpec spec = catalog::deterministic_linear(-0.5, 0.5);
    const DeterministicField oracle = deterministic_oracle(spec, 2000);
    double err[2];
    int q = 0;
    for (int n : {50, 100}) {
        const TimeGrid grid = make_grid(spec.horizon, n);
        const PathEnsemble ens = simulate_paths(spec, grid, {0.0, {0.0}}, 4, 1);
        err[q++] = sup_vs_oracle(solve_ebsvie_regression(spec, ens, {}), oracle);
    }
    const double ratio = err[0] / err[1];
    return {err[1] <= 0.02 && ratio >= 1.7 && ratio <= 2.3,
            fmt("sup error N=50 %.4g, N=100 %.4g, ratio %.3f", err[0], err[1], ratio)};
}

Outcome diagonal_closed_form() {
    const double beta = 0.5, psi0 = 1.0;
    const ProblemSpec spec = catalog::diagonal_volterra(beta, psi0);
    const TimeGrid grid = make_grid(spec.horizon, 100);
    const PathEnsemble ens = simulate_paths(spec, grid, {0.0, {0.0}}, 4, 1);
    const TwoTimeField f = solve_ebsvie_regression(spec, ens, {});
    double worst = 0.0;
    for (int k = 0; k <= 100; ++k) {
        const double exact = psi0 * std::exp(beta * (spec.horizon - grid.node(k)));
        worst = std::max(worst, std::abs(f.y_stats(k, k).mean[0] - exact));
    }
    return {worst <= 0.01, fmt("sup |Y(s,s) - psi0 exp(beta(T-s))| = %.4g", worst)};
}

Outcome crossval_heat() {
    const ProblemSpec spec = catalog::heat_quadratic();
    const TimeGrid grid = make_grid(1.0, 200);
    const SpatialMesh mesh(-6.0, 6.0, 400);
    const double c = calibrate_budget(grid, mesh);
    McParams mc;
    mc.n_paths = 100000;
    mc.threads = threads();
    const auto pts = default_sample_points(grid, mesh, 20);
    const CrossValReport rep = cross_validate(spec, grid, mesh, pts, mc, {}, c);
    double closed = 0.0;
    for (const auto& p : rep.points) {
        const double exact = p.point.x * p.point.x + 1.0 - p.point.s;
        closed = std::max({closed, std::abs(p.theta_mc - exact), std::abs(p.theta_pde - exact)});
    }
    return {rep.passes() >= 19 && closed <= 1.5e-2,
            fmt("%d/20 within 3SE+budget (C=%.3g), max |theta - closed form| = %.3g", rep.passes(), c, closed)};
}

Outcome crossval_nonlinear() {
    const ProblemSpec spec = catalog::nonlinear_ou();
    const TimeGrid grid = make_grid(1.0, 50);
    const SpatialMesh mesh(-6.0, 6.0, 400);
    const double c = calibrate_budget(grid, mesh);
    McParams mc;
    mc.n_paths = 100000;
    mc.threads = threads();
    const CrossValReport rep = cross_validate(spec, grid, mesh, default_sample_points(grid, mesh, 20), mc, {}, c);
    double worst = 0.0;
    for (const auto& p : rep.points) worst = std::max(worst, p.abs_error / p.tolerance);
    return {rep.passes() >= 18, fmt("%d/20 within 3SE+budget (C=%.3g), worst error/tolerance %.3f", rep.passes(), c, worst)};
}

Outcome picard_contraction() {
    const ProblemSpec spec = catalog::nonlinear_ou();
    const TimeGrid grid = make_grid(1.0, 100);
    const PathEnsemble ens = simulate_paths(spec, grid, {0.0, {0.0}}, 10000, 3);
    PicardOptions po;
    po.threads = threads();
    po.tol = 0.0;
    po.max_iter = 20;
    const PicardResult res = picard_solve(spec, ens, 0.9, 1.0, {}, po);
    const auto& dg = res.diagnostics;
    bool ok = dg.ratios.size() >= 5;
    double max_ratio = 0.0, spread = 0.0;
    for (double r : dg.ratios) max_ratio = std::max(max_ratio, r);
    for (std::size_t j = 2; j <= 5 && j < dg.ratios.size(); ++j) {
        spread = std::max(spread, std::abs(dg.ratios[j] - dg.fitted_ratio));
    }
    ok = ok && max_ratio < 0.5 && spread <= 0.1;

    const ProblemSpec det = catalog::deterministic_linear();
    const PathEnsemble dens = simulate_paths(det, grid, {0.0, {0.0}}, 4, 1);
    const TwoTimeField direct = solve_ebsvie_regression(det, dens, {});
    const TwoTimeField glued = glue_windows(det, dens, 10, {});
    double glue = 0.0;
    for (const auto& [i, k] : TriangularIndex(100).sweep_order()) {
        glue = std::max(glue, std::abs(direct.y_stats(i, k).mean[0] - glued.y_stats(i, k).mean[0]));
    }
    ok = ok && glue <= 1e-9;
    std::string ratios;
    for (double r : dg.ratios) ratios += fmt(" %.3g", r);
    return {ok, fmt("ratios [%s ], fitted %.3g, max deviation %.3g; glue vs direct %.3g", ratios.c_str(),
                    dg.fitted_ratio, spread, glue)};
}

Outcome z_triangle() {
    double rel[3];
    {
        const ProblemSpec spec = catalog::heat_quadratic();
        const TimeGrid grid = make_grid(1.0, 200);
        const PathEnsemble ens = simulate_paths(spec, grid, {0.0, {0.0}}, 100000, 11);
        SolverOptions so;
        so.threads = threads();
        so.labels = {0, 50, 100, 150};
        const TwoTimeField reg = solve_ebsvie_regression(spec, ens, {}, so);
        const VariationalField var = solve_variational_ebsvie(spec, ens, reg, {}, threads());
        const TwoTimeField pw = pathwise_z(var, ens, spec);
        auto pde = std::make_shared<const PdeField>(solve_nonlocal_pde(spec, grid, SpatialMesh(-6.0, 6.0, 400)));
        const TwoTimeField rep = representation_from_pde(pde, spec, ens);
        const ZComparison cmp = compare_z(reg, pw, rep);
        rel[0] = cmp.rel_reg_path;
        rel[1] = cmp.rel_reg_pde;
        rel[2] = cmp.rel_path_pde;
    }
    double lin = 0.0;
    {
        const ProblemSpec spec = catalog::heat_linear();
        const TimeGrid grid = make_grid(1.0, 50);
        const PathEnsemble ens = simulate_paths(spec, grid, {0.0, {0.0}}, 5000, 12);
        const TwoTimeField reg = solve_ebsvie_regression(spec, ens, {});
        const VariationalField var = solve_variational_ebsvie(spec, ens, reg, {});
        const TwoTimeField pw = pathwise_z(var, ens, spec);
        auto pde = std::make_shared<const PdeField>(solve_nonlocal_pde(spec, grid, SpatialMesh(-6.0, 6.0, 200)));
        const TwoTimeField rep = representation_from_pde(pde, spec, ens);
        for (int k = 0; k < 50; ++k) {
            for (int i = 0; i <= k; ++i) {
                for (const TwoTimeField* f : {&reg, &pw, &rep}) {
                    for (double v : f->z_values(i, k)) lin = std::max(lin, std::abs(v - 1.0));
                }
            }
        }
    }
    const bool ok = rel[0] <= 0.1 && rel[1] <= 0.1 && rel[2] <= 0.1 && lin <= 1e-12;
    return {ok, fmt("heat RMS rel reg/path %.3g reg/pde %.3g path/pde %.3g; linear max |Z-1| %.3g", rel[0], rel[1],
                    rel[2], lin)};
}

Outcome gradient_check() {
    const ProblemSpec spec = catalog::heat_quadratic();
    const TimeGrid grid = make_grid(1.0, 100);
    FiniteDiffParams fp;
    fp.n_paths = 100000;
    fp.seed = 5;
    fp.threads = threads();
    std::vector<FiniteDiffResult> res;
    for (double h : {0.2, 0.1, 0.05}) res.push_back(finite_diff_y(spec, grid, {0.0, {0.5}}, h, 0, fp));
    bool ok = true;
    std::string line;
    for (std::size_t q = 0; q < res.size(); ++q) {
        line += fmt(" h=%.2f dev %.4g (SE %.2g)", res[q].h, res[q].max_deviation, res[q].se_at_worst);
        if (q > 0 && res[q].max_deviation > res[q - 1].max_deviation + 2.0 * (res[q].se_at_worst + res[q - 1].se_at_worst)) {
            ok = false;
        }
    }
    return {ok, "deviation" + line};
}

Outcome adaptedness() {
    int cells = 0;
    std::string failures;
    for (const auto& name : catalog::names()) {
        const ProblemSpec spec = catalog::by_name(name);
        const TimeGrid grid = make_grid(spec.horizon, 50);
        const double t0 = grid.node(grid.nearest_index(0.5));
        const PathEnsemble ens = simulate_paths(spec, grid, {t0, std::vector<double>(spec.dim_state, 0.2)}, 2000, 9);
        const TwoTimeField f = solve_ebsvie_regression(spec, ens, {});
        const AdaptednessReport rep = adaptedness_probe(f, t0);
        cells += rep.cells_checked;
        if (!rep.passed) failures += " " + name + ":" + rep.violations.front();
    }
    return {failures.empty(), fmt("%d frozen cells checked over %zu instances%s", cells, catalog::names().size(),
                                  failures.c_str())};
}

Outcome stability() {
    const ProblemSpec spec = catalog::deterministic_linear();
    const TimeGrid grid = make_grid(spec.horizon, 100);
    const PathEnsemble ens = simulate_paths(spec, grid, {0.0, {0.0}}, 4, 1);
    const StabilityReport rep = stability_probe(spec, ens, {1e-1, 1e-2, 1e-3}, {});
    return {std::abs(rep.slope - 1.0) <= 0.1, fmt("log-log slope %.6f (SE %.2g)", rep.slope, rep.slope_se)};
}

struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "exact reductions", 1.0, exact_reductions},
        {2, "deterministic vs oracle", 10.0, deterministic_vs_oracle},
        {3, "diagonal closed form", 10.0, diagonal_closed_form},
        {4, "cross-validation heat", 180.0, crossval_heat},
        {5, "cross-validation nonlinear", 300.0, crossval_nonlinear},
        {6, "Picard contraction", 60.0, picard_contraction},
        {7, "Z-estimator triangle", 120.0, z_triangle},
        {8, "gradient check", 120.0, gradient_check},
        {9, "adaptedness", 30.0, adaptedness},
        {10, "stability", 30.0, stability},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool pass = o.pass && secs < c.limit_s;
        if (!pass) ++failed;
        std::printf("[%s] %2d %-28s %7.2fs (limit %.0fs)  %s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs,
                    c.limit_s, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
