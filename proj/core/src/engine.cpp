#include "magsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>

#include "magsim/errors.hpp"

namespace magsim {

std::vector<double> equidistant_t_grid(double t_min, double t_max, int steps) {
    if (steps < 1 || t_min <= 0.0 || t_max < t_min)
        throw std::invalid_argument("equidistant_t_grid: invalid range");
    std::vector<double> t(steps);
    if (steps == 1) {
        t[0] = t_min;
        return t;
    }
    const double dt = (t_max - t_min) / (steps - 1);
    for (int i = 0; i < steps; ++i) t[i] = t_min + i * dt;
    return t;
}

CyclePlan CyclePlan::paper_default(uint64_t seed) {
    CyclePlan plan;
    plan.t_values = equidistant_t_grid();
    plan.master_seed = seed;
    return plan;
}

void CyclePlan::validate() const {
    if (t_values.empty()) throw std::invalid_argument("CyclePlan: empty T grid");
    if (repetitions < 0) throw std::invalid_argument("CyclePlan: negative repetitions");
    double prev = 0.0;
    for (double t : t_values) {
        if (t <= prev) throw std::invalid_argument("CyclePlan: T values must be positive ascending");
        prev = t;
    }
}

std::vector<CycleSlot> build_schedule(const CyclePlan& plan) {
    plan.validate();
    auto make_sequence = [&](int state_index) {
        std::vector<double> seq;
        seq.reserve(plan.t_values.size() * plan.repetitions);
        for (int r = 0; r < plan.repetitions; ++r)
            seq.insert(seq.end(), plan.t_values.begin(), plan.t_values.end());
        Rng rng = Rng::stream(plan.master_seed, Rng::kCycleOrder, state_index);
        rng.shuffle(seq);
        return seq;
    };

    std::vector<CycleSlot> slots;
    if (!plan.interleave_test_field) {
        for (double t : make_sequence(plan.test_on_fixed ? 1 : 0))
            slots.push_back({t, plan.test_on_fixed});
        return slots;
    }
    const auto off = make_sequence(0);
    const auto on = make_sequence(1);
    slots.reserve(off.size() + on.size());
    for (size_t i = 0; i < off.size(); ++i) {
        slots.push_back({off[i], false});
        slots.push_back({on[i], true});
    }
    return slots;
}

namespace {

struct ShotOutcome {
    bool occupied = false;
    bool prepared = false;
    bool ended_down = false;
    bool detected = false;
};

// One site-shot. Draw order is fixed: load, preparation branch, Ramsey
// projection, survival, detection.
ShotOutcome simulate_shot(const ExperimentParams& params, const Eigen::Vector3d& position,
                          const Eigen::Vector3d& drift, double light_shift,
                          const SiteProperties& props, double t_free, bool test_on, Rng& rng) {
    ShotOutcome out;
    out.occupied = rng.bernoulli(params.p_load);
    if (!out.occupied) {
        out.detected = rng.bernoulli(props.detection_false_positive);
        return out;
    }
    const double u = rng.uniform();
    const bool prepared_up = u < params.prep.p_prepare_up;
    const bool start_down =
        !prepared_up && u < params.prep.p_prepare_up + params.prep.residual_down_population;
    out.prepared = prepared_up;
    if (prepared_up || start_down) {
        const double b_local = (field_at(params.scene, position, test_on) + drift).norm();
        const double detuning =
            effective_detuning(params.ramsey.two_photon_difference, b_local, light_shift,
                               params.states, params.constants);
        const double p_down = ramsey_down_probability(detuning, t_free, params.ramsey, start_down);
        out.ended_down = rng.bernoulli(p_down);
    }
    // Pushout clears the F=3 manifold; only atoms ending in |down> survive to
    // the final image, subject to per-cycle background loss.
    const bool present = out.ended_down && rng.bernoulli(props.survival_probability);
    out.detected = present ? rng.bernoulli(props.detection_true_positive)
                           : rng.bernoulli(props.detection_false_positive);
    return out;
}

void fill_record(ShotRecord& rec, const ShotOutcome& out, uint32_t cycle, int32_t site,
                 double t_free, bool test_on) {
    rec.cycle = cycle;
    rec.site = site;
    rec.t_free = t_free;
    rec.test_on = test_on;
    rec.occupied_before = out.occupied;
    rec.detected_after = out.detected;
    rec.prepared = out.prepared;
    rec.ended_down = out.ended_down;
}

void run_workers(int jobs, uint32_t n_cycles, const std::function<void(uint32_t)>& body) {
    jobs = std::max(1, jobs);
    if (jobs == 1) {
        for (uint32_t c = 0; c < n_cycles; ++c) body(c);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w] {
            for (uint32_t c = static_cast<uint32_t>(w); c < n_cycles;
                 c += static_cast<uint32_t>(jobs))
                body(c);
        });
    }
    for (auto& t : workers) t.join();
}

}  // namespace

std::vector<ShotRecord> run_cycle(const ExperimentParams& params,
                                  std::span<const SiteProperties> site_props, double t_free,
                                  bool test_on, uint32_t cycle_id, uint64_t master_seed) {
    if (static_cast<int>(site_props.size()) != params.grid.site_count())
        throw std::invalid_argument("run_cycle: site_props size mismatch");
    std::vector<ShotRecord> records(site_props.size());
    for (int s = 0; s < params.grid.site_count(); ++s) {
        Rng rng = Rng::stream(master_seed, Rng::kShot, cycle_id, static_cast<uint64_t>(s));
        const Eigen::Vector2d xy = params.grid.site_position(s);
        const Eigen::Vector3d pos(xy.x(), xy.y(), 0.0);
        const auto out = simulate_shot(params, pos, drift_offset(params, cycle_id),
                                       site_props[s].light_shift_offset, site_props[s], t_free,
                                       test_on, rng);
        fill_record(records[s], out, cycle_id, s, t_free, test_on);
    }
    return records;
}

Dataset run_experiment(const ExperimentParams& params, const CyclePlan& plan, int jobs) {
    Rng props_rng = Rng::stream(plan.master_seed, Rng::kSiteProperties);
    const auto site_props =
        draw_site_properties(params.grid, params.mean_light_shift, params.light_shift_spread,
                             params.detection_defaults, props_rng);
    const auto schedule = build_schedule(plan);

    Dataset ds;
    ds.mode = "array";
    ds.master_seed = plan.master_seed;
    ds.grid = params.grid;
    ds.p_load = params.p_load;
    ds.p_prepare = params.prep.p_prepare_up;
    ds.timing = params.timing;
    ds.t_values = plan.t_values;
    ds.truth_light_shift.reserve(site_props.size());
    for (const auto& p : site_props) ds.truth_light_shift.push_back(p.light_shift_offset);

    const int n_sites = params.grid.site_count();
    ds.records.resize(schedule.size() * static_cast<size_t>(n_sites));
    run_workers(jobs, static_cast<uint32_t>(schedule.size()), [&](uint32_t c) {
        const auto& slot = schedule[c];
        auto cycle_records = run_cycle(params, site_props, slot.t_free, slot.test_on, c,
                                       plan.master_seed);
        std::copy(cycle_records.begin(), cycle_records.end(),
                  ds.records.begin() + static_cast<size_t>(c) * n_sites);
    });
    return ds;
}

Dataset scanning_probe_run(const ExperimentParams& params, const CyclePlan& plan,
                           std::span<const Eigen::Vector2d> positions,
                           const SteerableTweezer& tweezer, double probe_light_shift,
                           int jobs) {
    for (const auto& p : positions) {
        if (!tweezer.contains(p))
            throw std::invalid_argument("scanning_probe_run: position outside addressable window");
    }
    const auto schedule = build_schedule(plan);

    Dataset ds;
    ds.mode = "scan";
    ds.master_seed = plan.master_seed;
    ds.grid = params.grid;
    ds.positions.assign(positions.begin(), positions.end());
    ds.p_load = params.p_load;
    ds.p_prepare = params.prep.p_prepare_up;
    ds.timing = params.timing;
    ds.t_values = plan.t_values;

    SiteProperties probe_props = params.detection_defaults;
    probe_props.light_shift_offset = probe_light_shift;

    const int n_pos = static_cast<int>(positions.size());
    ds.records.resize(schedule.size() * static_cast<size_t>(n_pos));
    run_workers(jobs, static_cast<uint32_t>(schedule.size()), [&](uint32_t c) {
        const auto& slot = schedule[c];
        for (int i = 0; i < n_pos; ++i) {
            Rng rng = Rng::stream(plan.master_seed, Rng::kProbeShot, c, static_cast<uint64_t>(i));
            const Eigen::Vector3d pos(positions[i].x(), positions[i].y(), 0.0);
            const auto out = simulate_shot(params, pos, drift_offset(params, c),
                                           probe_light_shift, probe_props, slot.t_free,
                                           slot.test_on, rng);
            fill_record(ds.records[static_cast<size_t>(c) * n_pos + i], out, c, i, slot.t_free,
                        slot.test_on);
        }
    });
    return ds;
}

}  // namespace magsim
