#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ebsvie/problem.hpp"

namespace ebsvie::cli {

/// Config errors carry the offending field (or line/column for syntax).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    ProblemSpec problem;
    std::string problem_source;  ///< catalog name, file path or "inline"
    int n_steps = 100;
    double x_min = -6.0;
    double x_max = 6.0;
    int n_cells = 400;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 1;
    int basis_degree = 4;
    double theta_weight = 0.5;
    double start_t = 0.0;
    std::vector<double> start_x;
    std::filesystem::path outputs;
    // Command blocks.
    int crossval_points = 20;
    std::optional<double> budget_constant;
    int oracle_steps = 2000;
    std::vector<double> fd_steps{0.2, 0.1, 0.05};
    int picard_windows = 0;
    std::vector<int> bench_steps{25, 50, 100, 200};
    /// Canonical compact JSON of the parsed document, hashed into the manifest.
    std::string canonical;
};

/// Parses and validates a config document. Relative problem paths resolve
/// against `base_dir`. Unknown keys are fatal.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace ebsvie::cli
