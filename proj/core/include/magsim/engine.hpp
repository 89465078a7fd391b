#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "magsim/array.hpp"
#include "magsim/constants.hpp"
#include "magsim/fields.hpp"
#include "magsim/physics.hpp"

namespace magsim {

// Free-precession schedule: T values, interleaved test-field states, and the
// pseudo-random acquisition order, all derived from the master seed.
struct CyclePlan {
    std::vector<double> t_values;        // s, strictly positive, ascending
    bool interleave_test_field = true;
    bool test_on_fixed = false;          // used when interleaving is off
    int repetitions = 44;                // per (T, field-state)
    uint64_t master_seed = 1;

    static CyclePlan paper_default(uint64_t seed = 1);
    void validate() const;
};

// 55 equidistant steps covering 2..110 us.
std::vector<double> equidistant_t_grid(double t_min = 2e-6, double t_max = 110e-6,
                                       int steps = 55);

struct PrepModel {
    double p_prepare_up = 0.30;
    double residual_down_population = 0.0;
};

struct ShotRecord {
    uint32_t cycle = 0;
    int32_t site = 0;  // site index, or position index in scan mode
    double t_free = 0.0;
    bool test_on = false;
    bool occupied_before = false;
    bool detected_after = false;
    // Hidden truth, emitted to file only in diagnostic mode.
    bool prepared = false;
    bool ended_down = false;

    bool operator==(const ShotRecord&) const = default;
};

struct CycleSlot {
    double t_free;
    bool test_on;
};

// Deterministic interleaved schedule: each field-state's T sequence is its own
// seeded shuffle of (t_values x repetitions), and states strictly alternate
// (off first), so on/off cycle counts differ by at most one.
std::vector<CycleSlot> build_schedule(const CyclePlan& plan);

// Lab-time bookkeeping carried as cycle metadata; it never enters the shot
// physics, only duty-cycle accounting.
struct CycleTiming {
    double exposure_time = 60e-3;       // s, per fluorescence image
    double trap_depth_load = 1e-3;      // K, loading and imaging
    double trap_depth_sequence = 0.2e-3;  // K, during the Ramsey sequence
};

// Everything the shot physics needs, frozen for the experiment's duration.
struct ExperimentParams {
    FieldScene scene;
    GridGeometry grid;
    AtomicConstants constants = AtomicConstants::rb85();
    SensorStates states = SensorStates::default_pair();
    RamseyParams ramsey;
    PrepModel prep;
    double p_load = 0.5;
    double mean_light_shift = 0.0;    // rad/s
    double light_shift_spread = 0.0;  // rad/s
    SiteProperties detection_defaults;
    CycleTiming timing;
    // Slow-drift hook: a uniform field added per elapsed cycle. Off (zero) by
    // default; drifting fields are otherwise out of scope.
    Eigen::Vector3d field_drift_per_cycle = Eigen::Vector3d::Zero();
};

// Uniform field offset accumulated by the drift hook at a given cycle.
inline Eigen::Vector3d drift_offset(const ExperimentParams& params, uint32_t cycle) {
    return static_cast<double>(cycle) * params.field_drift_per_cycle;
}

struct Dataset {
    std::string mode = "array";  // "array" | "scan"
    uint64_t master_seed = 0;
    std::string config_hash;
    GridGeometry grid;
    std::vector<Eigen::Vector2d> positions;  // scan mode: index -> coordinates
    double p_load = 0.5;
    double p_prepare = 0.30;
    double cycle_rate = 10.0;  // achievable lab cycles/s, reporting only
    CycleTiming timing;
    std::vector<double> t_values;
    std::vector<ShotRecord> records;
    std::vector<double> truth_light_shift;  // per site, diagnostic only
};

// One measurement cycle over all grid sites: load, prepare, Ramsey at the
// site's local detuning, pushout, survival, detection. Every (site, cycle)
// consumes its own RNG stream, so records are schedule-independent.
std::vector<ShotRecord> run_cycle(const ExperimentParams& params,
                                  std::span<const SiteProperties> site_props, double t_free,
                                  bool test_on, uint32_t cycle_id, uint64_t master_seed);

// Full interleaved experiment; bit-reproducible from (params, plan), with
// `jobs` worker threads striping cycles without changing the result.
Dataset run_experiment(const ExperimentParams& params, const CyclePlan& plan, int jobs = 1);

// Same cycle logic for a single steerable-tweezer probe atom per cycle at each
// requested position. Positions must lie inside the addressable window.
Dataset scanning_probe_run(const ExperimentParams& params, const CyclePlan& plan,
                           std::span<const Eigen::Vector2d> positions,
                           const SteerableTweezer& tweezer, double probe_light_shift,
                           int jobs = 1);

}  // namespace magsim
