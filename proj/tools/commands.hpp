#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace ebsvie::cli {

enum ExitCode { kOk = 0, kUsage = 1, kSolverFailure = 2, kInvariantFailure = 3 };

struct RunContext {
    RunConfig config;
    std::string command;
    std::filesystem::path out_dir;
    int threads = 1;
};

/// Every file a command writes goes through here so the manifest lists it.
class ArtifactLog {
public:
    explicit ArtifactLog(std::filesystem::path dir) : dir_(std::move(dir)) {}
    std::filesystem::path path(const std::string& name);
    const std::vector<std::string>& files() const { return files_; }
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
};

const std::vector<std::string>& command_names();

/// Runs the command and writes manifest.json. Returns the exit code;
/// library errors propagate to the caller.
int run_command(const RunContext& ctx);

}  // namespace ebsvie::cli
