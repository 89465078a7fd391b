#pragma once

#include <string>

#include "magsim/config.hpp"
#include "magsim/estimate.hpp"

namespace magsim {

// Command implementations shared by the CLI and the test suites. All file
// writes are atomic; every report embeds the hash of its input.

struct SimulateResult {
    std::string dataset_path;
    size_t records = 0;
};

SimulateResult simulate_command(const RunConfig& config, const std::string& out_dir,
                                int jobs = 1, bool diagnostic = false);

struct EstimateResult {
    std::string field_map_path;
    std::string gradients_path;
    std::string summary_path;
    FieldMap map;
    ResolutionReport resolution;
    SensitivityReport sensitivity;
    std::vector<GradientFit> row_gradients;  // rows with enough converged sites
    GradientFit plane;
    bool plane_valid = false;
    double mean_row_slope = 0.0;
};

EstimateResult estimate_command(const std::string& dataset_path, const std::string& out_dir,
                                double cycle_rate = 0.0, int jobs = 1);  // rate <= 0: use the dataset's

struct RearrangeResult {
    std::string trace_path;
    AssemblyStats stats;
};

RearrangeResult rearrange_command(const RunConfig& config, const std::string& out_dir);

struct ScanResult {
    std::string dataset_path;
    std::string map_path;
    FieldMap map;
};

ScanResult scan_command(const RunConfig& config, const std::string& out_dir, int jobs = 1,
                        bool diagnostic = false);

}  // namespace magsim
