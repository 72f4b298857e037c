#include "run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ebsvie/errors.hpp"
#include "ebsvie/problem_io.hpp"

namespace ebsvie::cli {

using nlohmann::json;

namespace {

void only_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& where, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

void check_range(bool ok, const std::string& field, const std::string& rule) {
    if (!ok) throw ConfigError(field + ": must be " + rule);
}

std::string position(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

ProblemSpec resolve_problem(const json& node, const std::filesystem::path& base_dir, std::string& source) {
    try {
        if (node.is_object()) {
            source = "inline";
            return problem_from_json(node.dump());
        }
        if (!node.is_string()) throw ConfigError("problem: expected an object, a catalog name or a file path");
        const auto ref = node.get<std::string>();
        for (const auto& name : catalog::names()) {
            if (ref == name) {
                source = ref;
                return catalog::by_name(ref);
            }
        }
        std::filesystem::path p(ref);
        if (p.is_relative()) p = base_dir / p;
        std::ifstream in(p);
        if (!in) throw ConfigError("problem: '" + ref + "' is neither a catalog instance nor a readable file");
        std::stringstream ss;
        ss << in.rdbuf();
        source = p.string();
        return problem_from_json(ss.str());
    } catch (const LoadError& e) {
        throw ConfigError(std::string("problem: ") + e.what());
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("problem: ") + e.what());
    }
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("syntax error at " + position(text, e.byte == 0 ? 0 : e.byte - 1));
    }
    only_keys(doc, "config",
              {"problem", "grid", "mesh", "mc", "pde", "start", "outputs", "crossval", "oracle", "variational",
               "picard", "bench"});
    if (!doc.contains("problem")) throw ConfigError("config: missing key 'problem'");
    RunConfig c;
    c.problem = resolve_problem(doc.at("problem"), base_dir, c.problem_source);
    try {
        c.problem.check();
    } catch (const Error& e) {
        throw ConfigError(std::string("problem: ") + e.what());
    }

    if (doc.contains("grid")) {
        const auto& g = doc.at("grid");
        only_keys(g, "grid", {"N"});
        c.n_steps = get<int>(g, "N", "grid", c.n_steps);
        check_range(c.n_steps >= 1 && c.n_steps <= 100000, "grid.N", "in [1, 100000]");
    }
    if (doc.contains("mesh")) {
        const auto& m = doc.at("mesh");
        only_keys(m, "mesh", {"x_min", "x_max", "J"});
        c.x_min = get<double>(m, "x_min", "mesh", c.x_min);
        c.x_max = get<double>(m, "x_max", "mesh", c.x_max);
        c.n_cells = get<int>(m, "J", "mesh", c.n_cells);
        check_range(c.x_max > c.x_min, "mesh.x_max", "greater than mesh.x_min");
        check_range(c.n_cells >= 4 && c.n_cells <= 1000000, "mesh.J", "in [4, 1000000]");
    }
    if (doc.contains("mc")) {
        const auto& m = doc.at("mc");
        only_keys(m, "mc", {"n_paths", "seed", "basis_degree"});
        const auto n = get<std::int64_t>(m, "n_paths", "mc", static_cast<std::int64_t>(c.n_paths));
        check_range(n >= 1 && n <= 100000000, "mc.n_paths", "in [1, 1e8]");
        c.n_paths = static_cast<std::size_t>(n);
        c.seed = get<std::uint64_t>(m, "seed", "mc", c.seed);
        c.basis_degree = get<int>(m, "basis_degree", "mc", c.basis_degree);
        check_range(c.basis_degree >= 0 && c.basis_degree <= 12, "mc.basis_degree", "in [0, 12]");
    }
    if (doc.contains("pde")) {
        const auto& p = doc.at("pde");
        only_keys(p, "pde", {"theta_weight"});
        c.theta_weight = get<double>(p, "theta_weight", "pde", c.theta_weight);
        check_range(c.theta_weight >= 0.0 && c.theta_weight <= 1.0, "pde.theta_weight", "in [0, 1]");
    }
    c.start_x.assign(static_cast<std::size_t>(c.problem.dim_state), 0.0);
    if (doc.contains("start")) {
        const auto& s = doc.at("start");
        only_keys(s, "start", {"t", "x"});
        c.start_t = get<double>(s, "t", "start", c.start_t);
        check_range(c.start_t >= 0.0 && c.start_t <= c.problem.horizon, "start.t", "in [0, T]");
        c.start_x = get<std::vector<double>>(s, "x", "start", c.start_x);
        check_range(c.start_x.size() == static_cast<std::size_t>(c.problem.dim_state), "start.x",
                    "a list of dim_state numbers");
    }
    if (doc.contains("outputs")) {
        if (!doc.at("outputs").is_string()) throw ConfigError("outputs: expected a directory path");
        c.outputs = doc.at("outputs").get<std::string>();
    }
    if (doc.contains("crossval")) {
        const auto& x = doc.at("crossval");
        only_keys(x, "crossval", {"points", "budget_constant"});
        c.crossval_points = get<int>(x, "points", "crossval", c.crossval_points);
        check_range(c.crossval_points >= 1 && c.crossval_points <= 1000, "crossval.points", "in [1, 1000]");
        if (x.contains("budget_constant")) {
            c.budget_constant = get<double>(x, "budget_constant", "crossval", 0.0);
            check_range(*c.budget_constant >= 0.0, "crossval.budget_constant", "non-negative");
        }
    }
    if (doc.contains("oracle")) {
        const auto& o = doc.at("oracle");
        only_keys(o, "oracle", {"N_oracle"});
        c.oracle_steps = get<int>(o, "N_oracle", "oracle", c.oracle_steps);
        check_range(c.oracle_steps >= 1000 && c.oracle_steps <= 100000, "oracle.N_oracle", "in [1000, 100000]");
    }
    if (doc.contains("variational")) {
        const auto& v = doc.at("variational");
        only_keys(v, "variational", {"h"});
        c.fd_steps = get<std::vector<double>>(v, "h", "variational", c.fd_steps);
        for (double h : c.fd_steps) check_range(h != 0.0, "variational.h", "non-zero");
    }
    if (doc.contains("picard")) {
        const auto& p = doc.at("picard");
        only_keys(p, "picard", {"windows"});
        c.picard_windows = get<int>(p, "windows", "picard", c.picard_windows);
        check_range(c.picard_windows >= 0 && c.picard_windows <= c.n_steps, "picard.windows", "in [0, N]");
    }
    if (doc.contains("bench")) {
        const auto& b = doc.at("bench");
        only_keys(b, "bench", {"N"});
        c.bench_steps = get<std::vector<int>>(b, "N", "bench", c.bench_steps);
        for (int n : c.bench_steps) check_range(n >= 2, "bench.N", "entries >= 2");
    }
    c.canonical = doc.dump();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), path.parent_path());
}

}  // namespace ebsvie::cli
