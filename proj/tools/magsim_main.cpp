#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "magsim/errors.hpp"
#include "magsim/runner.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<uint64_t> seed;
    int jobs = 1;
    bool diagnostic = false;
};

magsim::RunConfig make_config(const CommonOpts& opts) {
    magsim::RunConfig config =
        opts.config_path.empty() ? magsim::RunConfig{} : magsim::load_config(opts.config_path);
    if (opts.seed) config.seed = *opts.seed;
    return config;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_jobs = true) {
    cmd->add_option("--config", opts.config_path, "JSON run configuration (defaults when omitted)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "master seed override");
    if (with_jobs)
        cmd->add_option("--jobs", opts.jobs, "worker threads (result-invariant)")
            ->check(CLI::PositiveNumber);
    cmd->add_flag("--diagnostic-truth", opts.diagnostic, "emit hidden-truth columns");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"magsim: tweezer-array optical magnetometry simulator"};
    app.require_subcommand(1);

    CommonOpts sim_opts, est_opts, rear_opts, scan_opts;
    std::string dataset_path;

    auto* simulate = app.add_subcommand("simulate", "run the shot-level experiment simulation");
    add_common(simulate, sim_opts);

    auto* estimate = app.add_subcommand("estimate", "fit a dataset into maps and reports");
    estimate->add_option("dataset", dataset_path, "dataset file from simulate/scan")->required();
    estimate->add_option("--out", est_opts.out_dir, "output directory");
    estimate->add_option("--jobs", est_opts.jobs, "worker threads (result-invariant)")
        ->check(CLI::PositiveNumber);

    auto* rearrange = app.add_subcommand("rearrange", "plan and execute sub-array assembly");
    add_common(rearrange, rear_opts, false);

    auto* scan = app.add_subcommand("scan", "steerable-probe scanning run");
    add_common(scan, scan_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // bad flags count as config errors
    }

    try {
        if (simulate->parsed()) {
            const auto config = make_config(sim_opts);
            const auto result =
                magsim::simulate_command(config, sim_opts.out_dir, sim_opts.jobs,
                                         sim_opts.diagnostic);
            std::printf("wrote %s (%zu records)\n", result.dataset_path.c_str(), result.records);
        } else if (estimate->parsed()) {
            const auto result =
                magsim::estimate_command(dataset_path, est_opts.out_dir, 0.0, est_opts.jobs);
            std::printf("wrote %s\nwrote %s\nwrote %s\n", result.field_map_path.c_str(),
                        result.gradients_path.c_str(), result.summary_path.c_str());
        } else if (rearrange->parsed()) {
            const auto config = make_config(rear_opts);
            const auto result = magsim::rearrange_command(config, rear_opts.out_dir);
            std::printf("wrote %s (duty cycle %.3f)\n", result.trace_path.c_str(),
                        result.stats.duty_cycle);
        } else if (scan->parsed()) {
            const auto config = make_config(scan_opts);
            const auto result =
                magsim::scan_command(config, scan_opts.out_dir, scan_opts.jobs,
                                     scan_opts.diagnostic);
            std::printf("wrote %s\nwrote %s\n", result.dataset_path.c_str(),
                        result.map_path.c_str());
        }
    } catch (const magsim::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const magsim::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const magsim::EstimationError& e) {
        std::fprintf(stderr, "estimation error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
