#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "ebsvie/errors.hpp"
#include "ebsvie/mc_solver.hpp"
#include "ebsvie/paths.hpp"
#include "ebsvie/plotdata.hpp"
#include "ebsvie/problem_io.hpp"
#include "run_config.hpp"

using namespace ebsvie;
using namespace ebsvie::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("ebsvie_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& command, const std::string& config, const fs::path& out) {
    RunContext ctx;
    ctx.command = command;
    ctx.config = parse_run_config(config, fs::current_path());
    ctx.out_dir = out;
    return run_command(ctx);
}

std::string expect_config_error(const std::string& text) {
    try {
        parse_run_config(text, fs::current_path());
    } catch (const ConfigError& e) {
        return e.what();
    }
    ADD_FAILURE() << "accepted: " << text;
    return {};
}

}  // namespace

TEST(RunConfig, Defaults) {
    const RunConfig c = parse_run_config(R"({"problem": "heat_quadratic"})", fs::current_path());
    EXPECT_EQ(c.problem_source, "heat_quadratic");
    EXPECT_EQ(c.n_steps, 100);
    EXPECT_EQ(c.start_x, std::vector<double>{0.0});
}

TEST(RunConfig, StrictKeys) {
    EXPECT_NE(expect_config_error(R"({"problem": "constant", "gird": {"N": 10}})").find("gird"), std::string::npos);
    EXPECT_NE(expect_config_error(R"({"problem": "constant", "mc": {"paths": 10}})").find("mc"), std::string::npos);
    EXPECT_NE(expect_config_error(R"({"grid": {"N": 10}})").find("problem"), std::string::npos);
}

TEST(RunConfig, SyntaxErrorsCarryPosition) {
    const std::string msg = expect_config_error("{\n  \"problem\": \"constant\",\n  \"grid\": {\"N\": 10,}\n}");
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(RunConfig, RangeAndTypeChecks) {
    EXPECT_NE(expect_config_error(R"({"problem": "constant", "grid": {"N": 0}})").find("grid.N"), std::string::npos);
    EXPECT_NE(expect_config_error(R"({"problem": "constant", "pde": {"theta_weight": 1.5}})").find("theta_weight"),
              std::string::npos);
    EXPECT_NE(expect_config_error(R"({"problem": "constant", "mesh": {"x_min": 1, "x_max": 0}})").find("mesh"),
              std::string::npos);
    EXPECT_NE(expect_config_error(R"({"problem": "constant", "grid": {"N": "ten"}})").find("grid"), std::string::npos);
    EXPECT_NE(expect_config_error(R"({"problem": "no_such_instance"})").find("no_such_instance"), std::string::npos);
}

TEST(RunConfig, InlineAndFileProblems) {
    const fs::path dir = scratch_dir("problem_file");
    {
        std::ofstream out(dir / "p.json");
        out << problem_to_json(catalog::nonlinear_ou());
    }
    const RunConfig a = parse_run_config(R"({"problem": "p.json"})", dir);
    EXPECT_EQ(problem_hash(a.problem), problem_hash(catalog::nonlinear_ou()));
    const std::string inline_doc = "{\"problem\": " + problem_to_json(catalog::heat_linear(), -1) + "}";
    const RunConfig b = parse_run_config(inline_doc, dir);
    EXPECT_EQ(b.problem_source, "inline");
    EXPECT_EQ(problem_hash(b.problem), problem_hash(catalog::heat_linear()));
}

TEST(Cli, OracleOnDiagonalVolterra) {
    const fs::path out = scratch_dir("oracle");
    ASSERT_EQ(run("oracle", R"({"problem": "diagonal_volterra", "grid": {"N": 20}, "oracle": {"N_oracle": 1000}})", out),
              kOk);
    std::ifstream csv(out / "oracle.csv");
    std::string header, row;
    std::getline(csv, header);
    EXPECT_EQ(header, "i,k,t,s,y0");
    bool found = false;
    while (std::getline(csv, row)) {
        if (row.rfind("0,0,", 0) == 0) {
            const double y = std::stod(row.substr(row.find_last_of(',') + 1));
            EXPECT_NEAR(y, std::exp(0.5), 1e-6);
            found = true;
        }
    }
    EXPECT_TRUE(found);
}

TEST(Cli, CheckPassesOnCatalog) {
    const fs::path out = scratch_dir("check");
    EXPECT_EQ(run("check", R"({"problem": "constant"})", out), kOk);
    const auto report = nlohmann::json::parse(slurp(out / "check.json"));
    EXPECT_TRUE(report.at("passed").get<bool>());
    for (const auto& c : report.at("checks")) EXPECT_TRUE(c.at("passed").get<bool>()) << c.dump();
}

TEST(Cli, CrossValidateLinearPayoffAllPass) {
    const fs::path out = scratch_dir("crossval");
    ASSERT_EQ(run("cross-validate",
                  R"({"problem": "heat_linear", "grid": {"N": 40}, "mesh": {"J": 120},
                      "mc": {"n_paths": 2000}, "crossval": {"points": 5}})",
                  out),
              kOk);
    const auto report = nlohmann::json::parse(slurp(out / "crossval.json"));
    ASSERT_EQ(report.at("points").size(), 5u);
    for (const auto& p : report.at("points")) EXPECT_EQ(p.at("verdict"), "pass") << p.dump();
}

TEST(Cli, SolveMcIsByteReproducible) {
    const std::string cfg = R"({"problem": "nonlinear_ou", "grid": {"N": 20}, "mc": {"n_paths": 3000, "seed": 5}})";
    const fs::path a = scratch_dir("repro_a"), b = scratch_dir("repro_b");
    ASSERT_EQ(run("solve-mc", cfg, a), kOk);
    ASSERT_EQ(run("solve-mc", cfg, b), kOk);
    for (const char* f : {"field.csv", "diagonal.csv", "slice_t0.csv"}) {
        const std::string sa = slurp(a / f);
        EXPECT_FALSE(sa.empty()) << f;
        EXPECT_EQ(sa, slurp(b / f)) << f;
    }
}

TEST(Cli, ManifestHashesEveryOutput) {
    const fs::path out = scratch_dir("manifest");
    ASSERT_EQ(run("simulate", R"({"problem": "nonlinear_ou", "grid": {"N": 10}, "mc": {"n_paths": 100, "seed": 3}})", out),
              kOk);
    const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
    EXPECT_EQ(m.at("command"), "simulate");
    EXPECT_EQ(m.at("seed"), 3);
    EXPECT_TRUE(m.contains("config_hash"));
    EXPECT_TRUE(m.contains("wall_time_s"));
    std::set<std::string> listed;
    for (const auto& f : m.at("files")) {
        const std::string name = f.at("name");
        listed.insert(name);
        const std::string body = slurp(out / name);
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : body) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        std::ostringstream hex;
        hex << std::hex << std::setw(16) << std::setfill('0') << h;
        EXPECT_EQ(f.at("fnv1a64"), hex.str()) << name;
        EXPECT_EQ(f.at("bytes"), body.size()) << name;
    }
    for (const auto& entry : fs::directory_iterator(out)) {
        const std::string name = entry.path().filename().string();
        if (name != "manifest.json") {
            EXPECT_TRUE(listed.count(name)) << name;
        }
    }
}

TEST(Cli, SolverErrorsPropagate) {
    const fs::path out = scratch_dir("bad_oracle");
    EXPECT_THROW(run("oracle", R"({"problem": "heat_quadratic", "grid": {"N": 10}})", out), ArgumentError);
}

TEST(PlotData, UnknownKindRejected) {
    EXPECT_EQ(plot_kind_from("z-compare"), PlotKind::ZCompare);
    EXPECT_THROW(plot_kind_from("histogram"), ArgumentError);
}

TEST(PlotData, DiagonalOfConstantField) {
    const ProblemSpec s = catalog::constant(1.5);
    const PathEnsemble ens = simulate_paths(s, make_grid(1.0, 4), {0.0, {0.0}}, 10, 1);
    std::stringstream out;
    write_diagonal_csv(solve_ebsvie_regression(s, ens, {}), out);
    std::string line;
    std::getline(out, line);
    EXPECT_EQ(line, "s,y0");
    int rows = 0;
    while (std::getline(out, line)) {
        EXPECT_EQ(line.substr(line.find(',') + 1), "1.5");
        ++rows;
    }
    EXPECT_EQ(rows, 5);
}

TEST(PlotData, ConvergenceRatios) {
    std::stringstream out;
    write_convergence_csv({{50, 0.02}, {100, 0.01}}, out);
    std::string header, first, second;
    std::getline(out, header);
    std::getline(out, first);
    std::getline(out, second);
    EXPECT_EQ(header, "N,err,ratio");
    EXPECT_EQ(first, "50,0.02,");
    EXPECT_EQ(second, "100,0.01,2");
}

TEST(PlotData, ZCompareHasThreeEstimators) {
    ZComparison cmp;
    cmp.rows.push_back({0, 1, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0});
    std::stringstream out;
    write_zcompare_csv(cmp, out);
    std::string header;
    std::getline(out, header);
    EXPECT_EQ(header, "i,k,z_regression,z_pathwise,z_pde,rms_reg_path,rms_reg_pde,rms_path_pde");
}
