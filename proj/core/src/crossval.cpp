#include "ebsvie/crossval.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

#include "ebsvie/errors.hpp"
#include "ebsvie/mc_solver.hpp"
#include "ebsvie/paths.hpp"
#include "ebsvie/problem_io.hpp"
#include "ebsvie/rng.hpp"

namespace ebsvie {

int CrossValReport::passes() const {
    return static_cast<int>(std::count_if(points.begin(), points.end(), [](const CrossValPoint& p) { return p.pass; }));
}

namespace {

double halton(int index, int base) {
    double f = 1.0, r = 0.0;
    for (int i = index; i > 0; i /= base) {
        f /= base;
        r += f * (i % base);
    }
    return r;
}

}  // namespace

std::vector<SamplePoint> default_sample_points(const TimeGrid& grid, const SpatialMesh& mesh, int count) {
    if (count < 1) throw ArgumentError("validate", "sample count must be positive");
    const double width = mesh.x_max() - mesh.x_min();
    const int n = grid.n_steps();
    std::vector<SamplePoint> pts;
    for (int q = 1; q <= count; ++q) {
        const double u1 = halton(q, 2), u2 = halton(q, 3), u3 = halton(q, 5);
        int ti = grid.nearest_index(std::min(u1, u2) * grid.horizon());
        int si = grid.nearest_index(std::max(u1, u2) * grid.horizon());
        si = std::min(si, n - 1);
        ti = std::min(ti, si);
        pts.push_back({grid.node(ti), grid.node(si), mesh.x_min() + (0.25 + 0.5 * u3) * width});
    }
    return pts;
}

double calibrate_budget(const TimeGrid& grid, const SpatialMesh& mesh, const PdeParams& pde) {
    const ProblemSpec heat = catalog::heat_quadratic();
    if (std::abs(heat.horizon - grid.horizon()) > 1e-12) {
        throw ArgumentError("validate", "calibration grid must use the heat horizon T = 1");
    }
    PdeOptions opts;
    opts.theta_weight = pde.theta_weight;
    opts.threads = pde.threads;
    const PdeField f = solve_nonlocal_pde(heat, grid, mesh, opts);
    const double T = grid.horizon();
    double worst = 0.0;
    for (int k = 0; k <= grid.n_steps(); ++k) {
        for (int i = 0; i <= k; ++i) {
            for (int j = 0; j <= mesh.n_cells(); ++j) {
                const double x = mesh.node(j);
                if (!mesh.in_inner(x, 0.5)) continue;
                worst = std::max(worst, std::abs(f.at(i, k, j) - (x * x + T - grid.node(k))));
            }
        }
    }
    return worst / (grid.dt() + mesh.dx() * mesh.dx());
}

CrossValReport cross_validate(const ProblemSpec& spec, const TimeGrid& grid, const SpatialMesh& mesh,
                              const std::vector<SamplePoint>& points, const McParams& mc,
                              const PdeParams& pde, double budget_constant) {
    spec.check();
    if (spec.dim_state != 1) throw ArgumentError("validate", "cross-validation needs d = 1");
    CrossValReport report;
    report.budget_constant = budget_constant;
    report.budget = budget_constant * (grid.dt() + mesh.dx() * mesh.dx());

    for (const auto& pt : points) {
        const int ti = grid.index_of(pt.t), si = grid.index_of(pt.s);
        if (ti < 0 || si < 0) throw ArgumentError("validate", "sample point (t, s) must be grid nodes");
        if (ti > si) throw ArgumentError("validate", "sample point has t > s");
        if (!mesh.in_inner(pt.x, 0.8)) throw ArgumentError("validate", "sample x outside the inner 80% of the mesh");
    }

    PdeOptions popts;
    popts.theta_weight = pde.theta_weight;
    popts.threads = pde.threads;
    const PdeField field = solve_nonlocal_pde(spec, grid, mesh, popts);

    for (std::size_t q = 0; q < points.size(); ++q) {
        const SamplePoint& pt = points[q];
        CrossValPoint r;
        r.point = pt;
        r.t_index = grid.index_of(pt.t);
        r.s_index = grid.index_of(pt.s);
        const PathEnsemble ens = simulate_paths(spec, grid, StartPoint{pt.s, {pt.x}}, mc.n_paths,
                                                derive_seed(mc.seed, q), SimulationOptions{mc.threads});
        SolverOptions so;
        so.threads = mc.threads;
        so.labels = {r.t_index};
        so.min_level = r.s_index;
        const TwoTimeField y = solve_ebsvie_regression(spec, ens, mc.basis, so);
        r.theta_mc = y.y_stats(r.t_index, r.s_index).mean[0];
        const std::vector<double> sums = realized_backward_sum(y, r.t_index, r.s_index);
        const auto m = static_cast<std::size_t>(spec.dim_value);
        const std::size_t n = ens.n_paths();
        double mean = 0.0;
        for (std::size_t p = 0; p < n; ++p) mean += sums[p * m];
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t p = 0; p < n; ++p) ss += (sums[p * m] - mean) * (sums[p * m] - mean);
        r.se = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
        r.theta_pde = field.value(r.t_index, r.s_index, pt.x);
        r.abs_error = std::abs(r.theta_mc - r.theta_pde);
        r.rel_error = r.abs_error / std::max(std::abs(r.theta_pde), 1e-12);
        r.tolerance = 3.0 * r.se + report.budget;
        if (!std::isfinite(r.abs_error)) throw NumericalError("validate", "non-finite cross-validation error");
        r.pass = r.abs_error <= r.tolerance;
        report.points.push_back(r);
    }
    return report;
}

void write_crossval_csv(const CrossValReport& report, std::ostream& out) {
    out.precision(17);
    out << "t,s,x,theta_mc,se,theta_pde,abs_error,rel_error,tolerance,pass\n";
    for (const auto& p : report.points) {
        out << p.point.t << ',' << p.point.s << ',' << p.point.x << ',' << p.theta_mc << ',' << p.se << ','
            << p.theta_pde << ',' << p.abs_error << ',' << p.rel_error << ',' << p.tolerance << ','
            << (p.pass ? "pass" : "fail") << '\n';
    }
}

void write_crossval_json(const CrossValReport& report, std::ostream& out) {
    nlohmann::json j;
    j["budget_constant"] = report.budget_constant;
    j["budget"] = report.budget;
    j["passes"] = report.passes();
    j["count"] = report.points.size();
    auto& arr = j["points"] = nlohmann::json::array();
    for (const auto& p : report.points) {
        arr.push_back({{"t", p.point.t},
                       {"s", p.point.s},
                       {"x", p.point.x},
                       {"theta_mc", p.theta_mc},
                       {"se", p.se},
                       {"theta_pde", p.theta_pde},
                       {"abs_error", p.abs_error},
                       {"tolerance", p.tolerance},
                       {"verdict", p.pass ? "pass" : "fail"}});
    }
    out << j.dump(2) << '\n';
}

}  // namespace ebsvie
