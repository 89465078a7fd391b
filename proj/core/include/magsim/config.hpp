#pragma once

#include <array>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "magsim/assembly.hpp"
#include "magsim/engine.hpp"

namespace magsim {

// Rectangle pattern spec (row0, col0, height, width) or an explicit site list.
struct PatternSpec {
    std::optional<std::array<int, 4>> rect{{6, 7, 3, 3}};
    std::vector<int> sites;

    TargetPattern build(const GridGeometry& geom) const;
};

struct ScanSpec {
    // Explicit probe positions, or a line sweep when line_steps > 0.
    std::vector<Eigen::Vector2d> positions;
    Eigen::Vector2d line_from{0.0, 49e-6};
    Eigen::Vector2d line_to{119e-6, 49e-6};
    int line_steps = 0;

    std::vector<Eigen::Vector2d> build() const;
};

// Full run description; every physical default is the paper's value. Stored in
// SI units, with frequencies kept in ordinary hertz exactly as configured (the
// 2 pi conversion happens when the experiment is built, so files round-trip
// losslessly). JSON values may carry unit suffixes ("283 uT", "7 um",
// "38.7 kHz"), normalized on load.
struct RunConfig {
    GridGeometry grid;
    FieldScene scene = FieldScene::paper_default();

    double rabi_frequency_hz = 0.6e6;
    double pulse_duration = 0.42e-6;  // s
    double reference_detuning_hz = 38.7e3;  // preset offset in Delta_12
    double contrast = 0.70;
    double coherence_time = std::numeric_limits<double>::infinity();  // s

    double mean_light_shift_hz = 0.0;
    double light_shift_spread_hz = 1.3e3;

    PrepModel prep;
    SiteProperties detection;  // light_shift_offset unused here
    double p_load = 0.5;

    double t_min = 2e-6;
    double t_max = 110e-6;
    int t_steps = 55;
    int repetitions = 44;
    bool interleave = true;
    bool test_on_fixed = false;

    PatternSpec pattern;
    double blocking_radius = 2e-6;
    double p_move_success = 0.98;
    int max_rounds = 200;

    ScanSpec scan;
    double probe_light_shift_hz = 0.0;
    double probe_waist = 2e-6;
    double probe_window_size = 400e-6;
    double probe_step_resolution = 100e-9;

    double cycles_per_second = 10.0;
    CycleTiming timing;  // lab-time metadata, echoed into datasets
    Eigen::Vector3d field_drift_per_cycle = Eigen::Vector3d::Zero();  // hook, off
    uint64_t seed = 1;

    // Derived objects.
    ExperimentParams experiment_params() const;  // synthesizes Delta_12
    CyclePlan cycle_plan() const;
    SteerableTweezer steerable() const;
    AssemblyParams assembly_params() const;
};

RunConfig config_from_json_text(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json_text(const RunConfig& config);
std::string config_hash(const RunConfig& config);

}  // namespace magsim
