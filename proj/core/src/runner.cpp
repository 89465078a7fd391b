#include "magsim/runner.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "magsim/dataset_io.hpp"
#include "magsim/errors.hpp"
#include "magsim/hash.hpp"

namespace magsim {

namespace {

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory " + dir + ": " + ec.message());
}

std::string si_to_nt(double tesla) {
    std::ostringstream os;
    os.precision(4);
    os << tesla * 1e9;
    return os.str();
}

}  // namespace

SimulateResult simulate_command(const RunConfig& config, const std::string& out_dir, int jobs,
                                bool diagnostic) {
    ensure_dir(out_dir);
    Dataset ds = run_experiment(config.experiment_params(), config.cycle_plan(), jobs);
    ds.config_hash = config_hash(config);
    ds.cycle_rate = config.cycles_per_second;
    const std::string path = join(out_dir, "dataset.tsv");
    write_dataset(path, ds, diagnostic);
    return {path, ds.records.size()};
}

EstimateResult estimate_command(const std::string& dataset_path, const std::string& out_dir,
                                double cycle_rate, int jobs) {
    ensure_dir(out_dir);
    const std::string input_hash = hex64(fnv1a64_file(dataset_path));
    const Dataset ds = read_dataset(dataset_path);
    if (ds.records.empty()) throw DataError("estimate: dataset has no records");

    EstimateResult result;
    result.map = build_field_map(ds, jobs);
    if (result.map.valid_count() == 0)
        throw EstimationError("estimate: no site produced a converged fringe pair");
    result.resolution = resolution(result.map);
    result.sensitivity =
        sensitivity(result.map, ds, cycle_rate > 0.0 ? cycle_rate : ds.cycle_rate);

    // Per-site field map table.
    {
        std::ostringstream os;
        os.precision(10);
        os << "# magsim-field-map v1\n";
        os << "# input " << dataset_path << "\n";
        os << "# input_hash " << input_hash << "\n";
        os << "# columns site row col x_m y_m omega_on sigma_on omega_off sigma_off"
              " delta_omega sigma_delta_omega delta_b_T sigma_delta_b_T status\n";
        for (const auto& s : result.map.sites) {
            int row = -1, col = -1;
            if (result.map.mode == "array") {
                const auto rc = result.map.grid.row_col(s.site);
                row = rc.first;
                col = rc.second;
            }
            os << s.site << ' ' << row << ' ' << col << ' ' << s.position.x() << ' '
               << s.position.y() << ' ';
            os << s.on.omega << ' ' << s.on.sigma_omega << ' ' << s.off.omega << ' '
               << s.off.sigma_omega << ' ';
            if (s.valid) {
                const double d_omega = s.on.omega - s.off.omega;
                const double sigma = std::hypot(s.on.sigma_omega, s.off.sigma_omega);
                os << d_omega << ' ' << sigma << ' ' << s.delta_b << ' ' << s.sigma_delta_b
                   << " ok";
                if (s.on.nyquist_ambiguous || s.off.nyquist_ambiguous) os << "+nyquist";
            } else {
                const auto reason = s.sigma_outlier
                                        ? std::string("sigma_outlier")
                                        : (!s.on.converged ? to_string(s.on.failure)
                                                           : to_string(s.off.failure));
                os << "nan nan nan nan failed:" << reason;
            }
            os << '\n';
        }
        result.field_map_path = join(out_dir, "field_map.tsv");
        atomic_write_text(result.field_map_path, os.str());
    }

    // Row gradients and the plane fit (array mode only).
    std::ostringstream gs;
    gs.precision(10);
    gs << "# magsim-gradients v1\n";
    gs << "# input_hash " << input_hash << "\n";
    gs << "# columns row slope_T_per_m sigma_slope intercept_T sigma_intercept n_sites\n";
    if (result.map.mode == "array") {
        double slope_sum = 0.0;
        for (int row = 0; row < result.map.grid.rows; ++row) {
            try {
                const GradientFit fit = fit_row_gradient(result.map, row);
                result.row_gradients.push_back(fit);
                slope_sum += fit.slope;
                gs << row << ' ' << fit.slope << ' ' << fit.sigma_slope << ' ' << fit.intercept
                   << ' ' << fit.sigma_intercept << ' ' << fit.n_sites << '\n';
            } catch (const EstimationError&) {
                gs << row << " nan nan nan nan 0\n";
            }
        }
        if (!result.row_gradients.empty())
            result.mean_row_slope = slope_sum / static_cast<double>(result.row_gradients.size());
        try {
            result.plane = fit_plane(result.map);
            result.plane_valid = true;
            gs << "plane " << result.plane.slope << ' ' << result.plane.sigma_slope << ' '
               << result.plane.intercept << ' ' << result.plane.sigma_intercept << ' '
               << result.plane.n_sites << " slope_y " << result.plane.slope_y << ' '
               << result.plane.sigma_slope_y << '\n';
        } catch (const EstimationError&) {
            gs << "plane nan nan nan nan 0\n";
        }
    }
    result.gradients_path = join(out_dir, "gradients.tsv");
    atomic_write_text(result.gradients_path, gs.str());

    // Human-readable summary.
    {
        std::ostringstream os;
        os << "magsim estimation summary\n";
        os << "input            " << dataset_path << " (hash " << input_hash << ")\n";
        os << "mode             " << result.map.mode << "\n";
        os << "sites            " << result.map.sites.size() << " (" << result.map.valid_count()
           << " converged)\n";
        os.precision(4);
        os << "resolution       " << si_to_nt(result.resolution.mean_sigma_b) << " nT mean, "
           << si_to_nt(result.resolution.spread_sigma_b) << " nT site-to-site spread\n";
        os << "stretch states   " << si_to_nt(result.resolution.stretch_sigma_b)
           << " nT projected resolution (susceptibility x" << k_stretch_susceptibility << ")\n";
        os << "events/site      " << result.sensitivity.mean_events << " (mean T "
           << result.sensitivity.mean_t * 1e6 << " us)\n";
        os << "coherent time    " << result.sensitivity.total_coherent_time * 1e3
           << " ms per site\n";
        os << "sensitivity      " << result.sensitivity.sensitivity * 1e9 << " nT/sqrt(Hz)\n";
        os << "stretch sens.    " << result.sensitivity.stretch_sensitivity * 1e9
           << " nT/sqrt(Hz)\n";
        os << "lab projection   " << si_to_nt(result.sensitivity.lab_one_hour_resolution)
           << " nT after 1 h at " << result.sensitivity.lab_cycle_rate
           << " cycles/s (assembled sub-array, stretch states)\n";
        if (result.map.mode == "array" && !result.row_gradients.empty()) {
            os << "row gradients    mean " << result.mean_row_slope * 1e3 << " nT/um over "
               << result.row_gradients.size() << " rows\n";
            for (const auto& g : result.row_gradients) {
                os << "  row " << g.row << "  " << g.slope * 1e3 << " +- "
                   << g.sigma_slope * 1e3 << " nT/um (" << g.n_sites << " sites)\n";
            }
            if (result.plane_valid) {
                os << "plane fit        d|B|/dx " << result.plane.slope * 1e3 << " +- "
                   << result.plane.sigma_slope * 1e3 << " nT/um, d|B|/dy "
                   << result.plane.slope_y * 1e3 << " +- " << result.plane.sigma_slope_y * 1e3
                   << " nT/um\n";
            }
        }
        result.summary_path = join(out_dir, "summary.txt");
        atomic_write_text(result.summary_path, os.str());
    }
    return result;
}

RearrangeResult rearrange_command(const RunConfig& config, const std::string& out_dir) {
    ensure_dir(out_dir);
    const TargetPattern pattern = config.pattern.build(config.grid);
    const AssemblyParams params = config.assembly_params();

    // Trace one representative round in detail, then run the duty-cycle loop.
    std::ostringstream os;
    os << "# magsim-rearrange v1\n";
    os << "# config_hash " << config_hash(config) << "\n";
    Rng trace_rng = Rng::stream(config.seed, Rng::kAssembly, 0);
    const Occupancy occ = stochastic_load(config.grid, params.p_load, trace_rng);
    const Matching matching = assign(config.grid, occ, pattern);
    const MovePlan plan = sequence_moves(config.grid, matching, occ, params.blocking_radius);
    os << "# loaded " << occ.count() << " atoms, pattern " << pattern.sites.size()
       << " sites, matched cost " << matching.cost << " m, unfilled " << matching.unfilled
       << "\n";
    os << "# columns move source target waypoints length_m\n";
    for (size_t i = 0; i < plan.moves.size(); ++i) {
        const auto& m = plan.moves[i];
        os << i << ' ' << m.source << ' ' << m.target << ' ' << m.waypoints.size() << ' '
           << m.length;
        for (const auto& w : m.waypoints) os << ' ' << w.x() << ' ' << w.y();
        os << '\n';
    }

    Rng duty_rng = Rng::stream(config.seed, Rng::kAssembly, 1);
    RearrangeResult result;
    result.stats = repeated_assembly(config.grid, pattern, params, config.max_rounds, duty_rng);
    os << "# duty_cycle " << result.stats.duty_cycle << " over " << result.stats.rounds
       << " rounds, first_full " << result.stats.first_full_round << ", moves "
       << result.stats.total_moves << ", losses " << result.stats.total_losses << "\n";
    result.trace_path = join(out_dir, "rearrange_trace.txt");
    atomic_write_text(result.trace_path, os.str());
    return result;
}

ScanResult scan_command(const RunConfig& config, const std::string& out_dir, int jobs,
                        bool diagnostic) {
    ensure_dir(out_dir);
    const auto positions = config.scan.build();
    if (positions.empty()) throw ConfigError("scan: no probe positions configured");

    Dataset ds = scanning_probe_run(config.experiment_params(), config.cycle_plan(), positions,
                                    config.steerable(), si::two_pi * config.probe_light_shift_hz,
                                    jobs);
    ds.config_hash = config_hash(config);
    ds.cycle_rate = config.cycles_per_second;
    ScanResult result;
    result.dataset_path = join(out_dir, "scan_dataset.tsv");
    write_dataset(result.dataset_path, ds, diagnostic);

    result.map = build_field_map(ds, jobs);
    std::ostringstream os;
    os.precision(10);
    os << "# magsim-scan-map v1\n";
    os << "# input_hash " << hex64(fnv1a64_file(result.dataset_path)) << "\n";
    os << "# columns position x_m y_m delta_b_T sigma_delta_b_T status\n";
    for (const auto& s : result.map.sites) {
        os << s.site << ' ' << s.position.x() << ' ' << s.position.y() << ' ';
        if (s.valid)
            os << s.delta_b << ' ' << s.sigma_delta_b << " ok\n";
        else
            os << "nan nan failed\n";
    }
    result.map_path = join(out_dir, "scan_map.tsv");
    atomic_write_text(result.map_path, os.str());
    return result;
}

}  // namespace magsim
