// Command-line driver: one subcommand per experiment kind.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical divergence
// (including partial ensembles), 4 I/O error, 1 anything else.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "nesslab/error.hpp"
#include "nesslab/experiment.hpp"

namespace {

int exit_code(nesslab::ErrorKind kind) {
    using nesslab::ErrorKind;
    switch (kind) {
        case ErrorKind::configuration:
        case ErrorKind::invalid_input:
        case ErrorKind::unsupported_configuration:
        case ErrorKind::pinning_required:
        case ErrorKind::invalid_profile:
            return 2;
        case ErrorKind::integration_diverged:
            return 3;
        case ErrorKind::io:
            return 4;
        default:
            return 1;
    }
}

std::uint64_t parse_seed(const std::string& text, const char* source) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &used, 10);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size() || text.front() == '-')
        throw nesslab::Error(nesslab::ErrorKind::configuration,
                             std::string(source) + " is not a valid seed: '" + text + "'");
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nesslab: nonequilibrium oscillator chain experiments"};
    app.require_subcommand(1);

    std::string config_path, seed_text, out_dir;
    unsigned workers = 0;
    bool force = false;

    for (const char* name : {"steady-state", "sweep-tau", "sweep-gamma", "sweep-size",
                             "green-kubo", "fluctuation-theorem", "boundary-profile",
                             "theory-tables"}) {
        auto* sub = app.add_subcommand(name, std::string("run a ") + name + " experiment");
        sub->add_option("--config", config_path, "YAML experiment configuration")->required();
        sub->add_option("--seed", seed_text, "master seed (overrides NESSLAB_SEED and the config)");
        sub->add_option("--workers", workers, "worker threads (default from config)");
        sub->add_option("--out", out_dir, "output directory (default from config)");
        sub->add_flag("--force", force, "overwrite existing results");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string kind = app.get_subcommands().front()->get_name();

    try {
        const auto start = std::chrono::steady_clock::now();
        auto config = nesslab::load_config(config_path);
        if (std::string(nesslab::to_string(config.experiment)) != kind)
            throw nesslab::Error(nesslab::ErrorKind::configuration,
                                 "subcommand '" + kind + "' does not match config experiment '" +
                                     std::string(nesslab::to_string(config.experiment)) + "'");
        if (!seed_text.empty())
            config.spec.seed = parse_seed(seed_text, "--seed");
        else if (const char* env = std::getenv("NESSLAB_SEED"); env && *env)
            config.spec.seed = parse_seed(env, "NESSLAB_SEED");
        if (workers > 0) config.workers = workers;
        if (!out_dir.empty()) config.output_dir = out_dir;
        config.validate();
        for (const auto& w : config.warnings) std::cerr << "warning: " << w << "\n";

        const auto result = nesslab::run_experiment(config);
        nesslab::WriteOptions opts;
        opts.force = force;
        opts.wall_time_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        nesslab::write_results(result, config, config.output_dir, opts);

        for (std::size_t i = config.warnings.size(); i < result.warnings.size(); ++i)
            std::cerr << "warning: " << result.warnings[i] << "\n";
        std::cerr << "wrote " << result.tables.size() << " tables to " << config.output_dir.string()
                  << "\n";
        if (result.partial()) {
            std::cerr << "error: " << result.failed_trajectories << " of " << result.trajectories
                      << " trajectories diverged; results are flagged partial\n";
            return 3;
        }
        return 0;
    } catch (const nesslab::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
