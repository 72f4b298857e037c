#include <cstdio>
#include <cstdlib>

#include <CLI11.hpp>

#include "commands.hpp"
#include "ebsvie/errors.hpp"

using namespace ebsvie::cli;

int main(int argc, char** argv) {
    CLI::App app{"Two-time backward Volterra equations: regression Monte Carlo, non-local PDE, validation"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    std::string output;
    int threads = 1;
    app.add_option("--threads", threads, "Worker cap; 1 is the reproducibility reference")
        ->check(CLI::Range(1, 1024));
    app.add_option("-o,--output", output, "Output directory (default: config 'outputs', then $EBSVIE_OUTPUT_DIR, then .)");

    for (const auto& name : command_names()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("config", config_path, "Run config (JSON)")->required();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    RunContext ctx;
    ctx.command = app.get_subcommands().front()->get_name();
    ctx.threads = threads;
    try {
        ctx.config = load_run_config(config_path);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kUsage;
    }
    if (!output.empty()) {
        ctx.out_dir = output;
    } else if (!ctx.config.outputs.empty()) {
        ctx.out_dir = ctx.config.outputs;
    } else if (const char* env = std::getenv("EBSVIE_OUTPUT_DIR")) {
        ctx.out_dir = env;
    } else {
        ctx.out_dir = ".";
    }

    try {
        return run_command(ctx);
    } catch (const ebsvie::InvariantError& e) {
        std::fprintf(stderr, "invariant failure: %s\n", e.what());
        return kInvariantFailure;
    } catch (const ebsvie::ArgumentError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const ebsvie::Error& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return kSolverFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kSolverFailure;
    }
}
