#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ebsvie/crossval.hpp"
#include "ebsvie/errors.hpp"
#include "ebsvie/mc_solver.hpp"
#include "ebsvie/oracle.hpp"
#include "ebsvie/paths.hpp"
#include "ebsvie/pde.hpp"
#include "ebsvie/plotdata.hpp"
#include "ebsvie/probes.hpp"
#include "ebsvie/problem_io.hpp"
#include "ebsvie/variational.hpp"

namespace ebsvie::cli {

using nlohmann::json;

std::filesystem::path ArtifactLog::path(const std::string& name) {
    files_.push_back(name);
    return dir_ / name;
}

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {"simulate", "solve-mc",       "solve-pde", "variational",
                                                   "cross-validate", "oracle", "check",     "bench"};
    return names;
}

namespace {

std::ofstream open_out(ArtifactLog& log, const std::string& name, bool binary = false) {
    std::ofstream out(log.path(name), binary ? std::ios::binary : std::ios::out);
    if (!out) throw ArgumentError("cli", "cannot write " + (log.dir() / name).string());
    out.precision(17);
    return out;
}

std::string fnv1a_file(const std::filesystem::path& p, std::uintmax_t& bytes) {
    std::ifstream in(p, std::ios::binary);
    std::uint64_t h = 1469598103934665603ULL;
    char buf[1 << 16];
    bytes = 0;
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const auto got = static_cast<std::size_t>(in.gcount());
        for (std::size_t i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        bytes += got;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

std::string fnv1a_text(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

TimeGrid grid_of(const RunConfig& c) { return make_grid(c.problem.horizon, c.n_steps); }
SpatialMesh mesh_of(const RunConfig& c) { return SpatialMesh(c.x_min, c.x_max, c.n_cells); }
StartPoint start_of(const RunConfig& c) { return {c.start_t, c.start_x}; }

PathEnsemble simulate(const RunContext& ctx) {
    const RunConfig& c = ctx.config;
    return simulate_paths(c.problem, grid_of(c), start_of(c), c.n_paths, c.seed, SimulationOptions{ctx.threads});
}

void print_warnings(const SolveLog& log) {
    for (const auto& w : log.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

int cmd_simulate(const RunContext& ctx, ArtifactLog& log) {
    const PathEnsemble ens = simulate(ctx);
    {
        auto out = open_out(log, "paths.bin", true);
        export_binary(ens, out);
    }
    auto out = open_out(log, "paths_summary.csv");
    export_summary_csv(ens, out);
    return kOk;
}

int cmd_solve_mc(const RunContext& ctx, ArtifactLog& log) {
    const RunConfig& c = ctx.config;
    const PathEnsemble ens = simulate(ctx);
    const BasisSpec basis{c.basis_degree};
    SolveLog slog;
    std::vector<PicardDiagnostics> diags;
    const TwoTimeField field = [&] {
        if (c.picard_windows > 0) {
            PicardOptions po;
            po.threads = ctx.threads;
            return glue_windows(c.problem, ens, c.picard_windows, basis, po, &diags);
        }
        SolverOptions so;
        so.threads = ctx.threads;
        so.log = &slog;
        return solve_ebsvie_regression(c.problem, ens, basis, so);
    }();
    print_warnings(slog);
    {
        auto out = open_out(log, "field.csv");
        export_field_csv(field, out);
    }
    {
        auto out = open_out(log, "diagonal.csv");
        write_diagonal_csv(field, out);
    }
    {
        auto out = open_out(log, "slice_t0.csv");
        write_slice_csv(field, 0, out);
    }
    if (!diags.empty()) {
        auto out = open_out(log, "picard.csv");
        out << "window,iteration,residual,ratio\n";
        for (std::size_t w = 0; w < diags.size(); ++w) {
            for (std::size_t j = 0; j < diags[w].residuals.size(); ++j) {
                out << w << ',' << j + 1 << ',' << diags[w].residuals[j] << ',';
                if (j > 0) out << diags[w].ratios[j];
                out << '\n';
            }
        }
    }
    return kOk;
}

int cmd_solve_pde(const RunContext& ctx, ArtifactLog& log) {
    const RunConfig& c = ctx.config;
    PdeOptions po;
    po.theta_weight = c.theta_weight;
    po.threads = ctx.threads;
    const PdeField field = solve_nonlocal_pde(c.problem, grid_of(c), mesh_of(c), po);
    {
        auto out = open_out(log, "pde.bin", true);
        export_pde_binary(field, out);
    }
    {
        auto out = open_out(log, "pde_slice_t0.csv");
        export_pde_slice_csv(field, 0, out);
    }
    const PdeResidual res = pde_residual(field, c.problem);
    auto out = open_out(log, "pde_residual.csv");
    out << "i,k,max_norm,l2_norm\n";
    for (std::size_t q = 0; q < res.label.size(); ++q) {
        out << res.label[q] << ',' << res.level[q] << ',' << res.max_norm[q] << ',' << res.l2_norm[q] << '\n';
    }
    return kOk;
}

int cmd_variational(const RunContext& ctx, ArtifactLog& log) {
    const RunConfig& c = ctx.config;
    const ProblemSpec& spec = c.problem;
    const PathEnsemble ens = simulate(ctx);
    const BasisSpec basis{c.basis_degree};
    SolverOptions so;
    so.threads = ctx.threads;
    const TwoTimeField base = solve_ebsvie_regression(spec, ens, basis, so);
    const VariationalField var = solve_variational_ebsvie(spec, ens, base, basis, ctx.threads);
    {
        auto out = open_out(log, "grad_y.csv");
        const int m = spec.dim_value, d = spec.dim_state;
        out << "i,k";
        for (int l = 0; l < m; ++l) {
            for (int e = 0; e < d; ++e) out << ",mean_g" << l << '_' << e;
        }
        for (int l = 0; l < m; ++l) {
            for (int e = 0; e < d; ++e) out << ",se_g" << l << '_' << e;
        }
        out << '\n';
        for (const auto& [i, k] : TriangularIndex(c.n_steps).sweep_order()) {
            if (!var.has_cell(i, k)) continue;
            const CellStats st = var.grad_y_stats(i, k);
            out << i << ',' << k;
            for (double v : st.mean) out << ',' << v;
            for (double v : st.se) out << ',' << v;
            out << '\n';
        }
    }
    const TwoTimeField pw = pathwise_z(var, ens, spec);
    if (spec.dim_state == 1) {
        PdeOptions po;
        po.theta_weight = c.theta_weight;
        po.threads = ctx.threads;
        auto pde = std::make_shared<const PdeField>(solve_nonlocal_pde(spec, grid_of(c), mesh_of(c), po));
        RepresentationInfo info;
        const TwoTimeField rep = representation_from_pde(pde, spec, ens, &info);
        for (const auto& w : info.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
        const ZComparison cmp = compare_z(base, pw, rep);
        auto out = open_out(log, "z_compare.csv");
        write_zcompare_csv(cmp, out);
    }
    auto out = open_out(log, "finite_diff.csv");
    out << "h,max_deviation,se_at_worst,worst_i,worst_k\n";
    FiniteDiffParams fp;
    fp.n_paths = c.n_paths;
    fp.seed = c.seed;
    fp.basis = basis;
    fp.threads = ctx.threads;
    for (double h : c.fd_steps) {
        const FiniteDiffResult r = finite_diff_y(spec, grid_of(c), start_of(c), h, 0, fp);
        out << h << ',' << r.max_deviation << ',' << r.se_at_worst << ',' << r.worst_i << ',' << r.worst_k << '\n';
    }
    return kOk;
}

int cmd_cross_validate(const RunContext& ctx, ArtifactLog& log) {
    const RunConfig& c = ctx.config;
    const TimeGrid grid = grid_of(c);
    const SpatialMesh mesh = mesh_of(c);
    PdeParams pp;
    pp.theta_weight = c.theta_weight;
    pp.threads = ctx.threads;
    double budget;
    if (c.budget_constant) {
        budget = *c.budget_constant;
    } else if (std::abs(c.problem.horizon - 1.0) < 1e-12) {
        budget = calibrate_budget(grid, mesh, pp);
    } else {
        throw ArgumentError("cli", "crossval.budget_constant is required when T != 1");
    }
    McParams mc;
    mc.n_paths = c.n_paths;
    mc.seed = c.seed;
    mc.basis = BasisSpec{c.basis_degree};
    mc.threads = ctx.threads;
    const CrossValReport rep =
        cross_validate(c.problem, grid, mesh, default_sample_points(grid, mesh, c.crossval_points), mc, pp, budget);
    {
        auto out = open_out(log, "crossval.csv");
        write_crossval_csv(rep, out);
    }
    auto out = open_out(log, "crossval.json");
    write_crossval_json(rep, out);
    std::printf("%d/%zu points within tolerance\n", rep.passes(), rep.points.size());
    return kOk;
}

int cmd_oracle(const RunContext& ctx, ArtifactLog& log) {
    const RunConfig& c = ctx.config;
    const DeterministicField f = deterministic_oracle(c.problem, c.oracle_steps, c.start_x);
    const TimeGrid grid = grid_of(c);
    auto out = open_out(log, "oracle.csv");
    out << "i,k,t,s";
    for (int l = 0; l < c.problem.dim_value; ++l) out << ",y" << l;
    out << '\n';
    for (const auto& [i, k] : TriangularIndex(c.n_steps).sweep_order()) {
        out << i << ',' << k << ',' << grid.node(i) << ',' << grid.node(k);
        for (int l = 0; l < c.problem.dim_value; ++l) out << ',' << f.value(grid.node(i), grid.node(k), l);
        out << '\n';
    }
    return kOk;
}

struct CheckRecord {
    std::string name;
    bool passed;
    double value;
    std::string detail;
};

double exact_gap(const TwoTimeField& f, double c) {
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

std::vector<CheckRecord> exact_suite(int threads) {
    std::vector<CheckRecord> out;
    const int n = 40;
    // Constant instance: every solver returns Y = c, Z = 0.
    {
        const ProblemSpec spec = catalog::constant(1.5);
        const TimeGrid grid = make_grid(spec.horizon, n);
        const PathEnsemble ens = simulate_paths(spec, grid, {0.0, {0.3}}, 500, 7, SimulationOptions{threads});
        SolverOptions so;
        so.threads = threads;
        const TwoTimeField mc = solve_ebsvie_regression(spec, ens, {}, so);
        out.push_back({"constant/regression", exact_gap(mc, 1.5) == 0.0, exact_gap(mc, 1.5), "max |Y-c|, |Z|"});
        auto pde = std::make_shared<const PdeField>(solve_nonlocal_pde(spec, grid, SpatialMesh(-4, 4, 80)));
        const double gp = exact_gap(representation_from_pde(pde, spec, ens), 1.5);
        out.push_back({"constant/pde", gp == 0.0, gp, "max |Y-c|, |Z|"});
        const VariationalField var = solve_variational_ebsvie(spec, ens, mc, {}, threads);
        const double gz = exact_gap(pathwise_z(var, ens, spec), 1.5);
        out.push_back({"constant/pathwise", gz == 0.0, gz, "max |Y-c|, |Z|"});
    }
    // Frozen region before the start time.
    for (const auto& name : catalog::names()) {
        const ProblemSpec spec = catalog::by_name(name);
        const TimeGrid grid = make_grid(spec.horizon, n);
        const double t0 = grid.node(grid.nearest_index(0.5));
        const PathEnsemble ens = simulate_paths(spec, grid, {t0, std::vector<double>(spec.dim_state, 0.2)}, 300, 9,
                                                SimulationOptions{threads});
        SolverOptions so;
        so.threads = threads;
        const AdaptednessReport rep = adaptedness_probe(solve_ebsvie_regression(spec, ens, {}, so), t0);
        out.push_back({"adaptedness/" + name, rep.passed, static_cast<double>(rep.violations.size()),
                       rep.passed ? std::to_string(rep.cells_checked) + " cells" : rep.violations.front()});
    }
    // Deterministic instances: Z = 0.
    for (const char* name : {"deterministic_linear", "diagonal_volterra", "tanh_product"}) {
        const ProblemSpec spec = catalog::by_name(name);
        const PathEnsemble ens = simulate_paths(spec, make_grid(spec.horizon, n), {0.0, {0.0}}, 4, 1);
        const TwoTimeField f = solve_ebsvie_regression(spec, ens, {});
        double z = 0.0;
        for (int k = 0; k < n; ++k) {
            for (int i = 0; i <= k; ++i) {
                for (double v : f.z_values(i, k)) z = std::max(z, std::abs(v));
            }
        }
        out.push_back({std::string("zero_z/") + name, z == 0.0, z, "max |Z|"});
    }
    // Label-direction modulus vanishes for t-independent data.
    for (const char* name : {"heat_quadratic", "diagonal_volterra", "constant"}) {
        const ProblemSpec spec = catalog::by_name(name);
        const PathEnsemble ens = simulate_paths(spec, make_grid(spec.horizon, n), {0.0, {0.1}}, 300, 3);
        const ContinuityReport rep = continuity_probe(solve_ebsvie_regression(spec, ens, {}));
        out.push_back({std::string("label_modulus/") + name, rep.label_modulus == 0.0, rep.label_modulus,
                       "max adjacent-label difference"});
    }
    // Zero perturbation leaves the field unchanged.
    {
        const ProblemSpec spec = catalog::deterministic_linear();
        const PathEnsemble ens = simulate_paths(spec, make_grid(spec.horizon, n), {0.0, {0.0}}, 4, 1);
        const StabilityReport rep = stability_probe(spec, ens, {0.0}, {});
        out.push_back({"stability/zero_eps", rep.rows[0].difference == 0.0, rep.rows[0].difference,
                       "field difference at eps = 0"});
    }
    // x-independent data: grad Y = 0.
    {
        const ProblemSpec spec = catalog::diagonal_volterra();
        const PathEnsemble ens = simulate_paths(spec, make_grid(spec.horizon, n), {0.0, {0.0}}, 4, 1);
        const TwoTimeField base = solve_ebsvie_regression(spec, ens, {});
        const VariationalField var = solve_variational_ebsvie(spec, ens, base, {});
        double g = 0.0;
        for (const auto& [i, k] : TriangularIndex(n).sweep_order()) {
            for (double v : var.grad_y_stats(i, k).mean) g = std::max(g, std::abs(v));
        }
        out.push_back({"variational/x_independent", g == 0.0, g, "max |grad Y|"});
    }
    // Reduction classes of the catalog.
    {
        const std::vector<std::pair<std::string, ReductionClass>> expected = {
            {"constant", ReductionClass::DETERMINISTIC}, {"deterministic_linear", ReductionClass::DETERMINISTIC},
            {"diagonal_volterra", ReductionClass::DETERMINISTIC}, {"heat_quadratic", ReductionClass::BSDE_FAMILY},
            {"heat_linear", ReductionClass::BSDE_FAMILY},   {"nonlinear_ou", ReductionClass::EBSVIE},
            {"tanh_product", ReductionClass::DETERMINISTIC}};
        for (const auto& [name, cls] : expected) {
            const ReductionClass got = classify(catalog::by_name(name));
            out.push_back({"classify/" + name, got == cls, 0.0, std::string(to_string(got))});
        }
    }
    return out;
}

int cmd_check(const RunContext& ctx, ArtifactLog& log) {
    const std::vector<CheckRecord> checks = exact_suite(ctx.threads);
    json j;
    bool all = true;
    auto& arr = j["checks"] = json::array();
    for (const auto& c : checks) {
        all = all && c.passed;
        arr.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"detail", c.detail}});
        std::printf("[%s] %s (%s = %.3g)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str(), c.value);
    }
    auto& sp = j["assumption_probes"] = json::object();
    for (const auto& name : catalog::names()) {
        const ValidationReport rep = validate_spec(catalog::by_name(name), 64, 1);
        sp[name] = rep.passed();
    }
    j["passed"] = all;
    auto out = open_out(log, "check.json");
    out << j.dump(2) << '\n';
    return all ? kOk : kInvariantFailure;
}

int cmd_bench(const RunContext& ctx, ArtifactLog& log) {
    const RunConfig& c = ctx.config;
    {
        const ProblemSpec spec = catalog::deterministic_linear();
        const DeterministicField oracle = deterministic_oracle(spec, 4000);
        std::vector<ConvergenceRow> rows;
        for (int n : c.bench_steps) {
            const PathEnsemble ens = simulate_paths(spec, make_grid(spec.horizon, n), {0.0, {0.0}}, 4, 1);
            SolverOptions so;
            so.threads = ctx.threads;
            const TwoTimeField f = solve_ebsvie_regression(spec, ens, {}, so);
            double err = 0.0;
            for (const auto& [i, k] : TriangularIndex(n).sweep_order()) {
                err = std::max(err, std::abs(f.y_stats(i, k).mean[0] - oracle.value(f.grid().node(i), f.grid().node(k))));
            }
            rows.push_back({n, err});
        }
        auto out = open_out(log, "convergence_regression.csv");
        write_convergence_csv(rows, out);
    }
    {
        const ProblemSpec spec = catalog::nonlinear_ou();
        std::vector<ConvergenceRow> rows;
        for (int n : c.bench_steps) {
            const TimeGrid grid = make_grid(spec.horizon, n);
            PdeOptions po;
            po.threads = ctx.threads;
            const PdeField f = solve_nonlocal_pde(spec, grid, SpatialMesh(-6.0, 6.0, 2 * n), po);
            const PathEnsemble ens = simulate_paths(spec, grid, {0.0, {0.0}}, 100, 17);
            rows.push_back({n, backward_identity_residual(f, spec, ens, 100).max_residual});
        }
        auto out = open_out(log, "convergence_backward_identity.csv");
        write_convergence_csv(rows, out);
    }
    return kOk;
}

}  // namespace

int run_command(const RunContext& ctx) {
    std::filesystem::create_directories(ctx.out_dir);
    ArtifactLog log(ctx.out_dir);
    const auto t0 = std::chrono::steady_clock::now();
    int code = kUsage;
    if (ctx.command == "simulate") code = cmd_simulate(ctx, log);
    else if (ctx.command == "solve-mc") code = cmd_solve_mc(ctx, log);
    else if (ctx.command == "solve-pde") code = cmd_solve_pde(ctx, log);
    else if (ctx.command == "variational") code = cmd_variational(ctx, log);
    else if (ctx.command == "cross-validate") code = cmd_cross_validate(ctx, log);
    else if (ctx.command == "oracle") code = cmd_oracle(ctx, log);
    else if (ctx.command == "check") code = cmd_check(ctx, log);
    else if (ctx.command == "bench") code = cmd_bench(ctx, log);
    else throw ArgumentError("cli", "unknown command '" + ctx.command + "'");
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const RunConfig& c = ctx.config;
    json m;
    m["command"] = ctx.command;
    m["version"] = EBSVIE_VERSION;
    m["config_hash"] = fnv1a_text(c.canonical);
    m["problem_hash"] = problem_hash(c.problem);
    m["problem_source"] = c.problem_source;
    m["seed"] = c.seed;
    m["N"] = c.n_steps;
    m["n_paths"] = c.n_paths;
    m["basis_degree"] = c.basis_degree;
    m["threads"] = ctx.threads;
    m["wall_time_s"] = wall;
    m["exit_code"] = code;
    auto& files = m["files"] = json::array();
    for (const auto& f : log.files()) {
        std::uintmax_t bytes = 0;
        const std::string h = fnv1a_file(ctx.out_dir / f, bytes);
        files.push_back({{"name", f}, {"bytes", bytes}, {"fnv1a64", h}});
    }
    std::ofstream out(ctx.out_dir / "manifest.json");
    out << m.dump(2) << '\n';
    return code;
}

}  // namespace ebsvie::cli
