#include <benchmark/benchmark.h>

#include "magsim/assembly.hpp"
#include "magsim/config.hpp"
#include "magsim/estimate.hpp"
#include "magsim/physics.hpp"

namespace {

void BM_RamseyProbability(benchmark::State& state) {
    magsim::RamseyParams params;
    double t = 2e-6;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            magsim::ramsey_down_probability(magsim::si::two_pi * 38.7e3, t, params));
        t = t < 110e-6 ? t + 2e-6 : 2e-6;
    }
}
BENCHMARK(BM_RamseyProbability);

void BM_RunCycle(benchmark::State& state) {
    magsim::RunConfig config;
    const auto params = config.experiment_params();
    magsim::Rng props_rng = magsim::Rng::stream(1, magsim::Rng::kSiteProperties);
    const auto props = magsim::draw_site_properties(params.grid, params.mean_light_shift,
                                                    params.light_shift_spread,
                                                    params.detection_defaults, props_rng);
    uint32_t cycle = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            magsim::run_cycle(params, props, 56e-6, cycle % 2 == 0, cycle, 1));
        ++cycle;
    }
    state.SetItemsProcessed(state.iterations() * params.grid.site_count());
}
BENCHMARK(BM_RunCycle);

void BM_FitFringe(benchmark::State& state) {
    // Paper-scale statistics: 55 T values, ~22 trials each.
    magsim::RunConfig config;
    config.grid.rows = 1;
    config.grid.cols = 1;
    config.repetitions = 44;
    const auto ds = magsim::run_experiment(config.experiment_params(), config.cycle_plan());
    std::vector<magsim::FringePoint> pts;
    for (double t : ds.t_values) {
        magsim::FringePoint p;
        p.t = t;
        for (const auto& r : ds.records) {
            if (r.t_free != t || r.test_on || !r.occupied_before) continue;
            ++p.trials;
            if (r.detected_after) ++p.successes;
        }
        pts.push_back(p);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(magsim::fit_fringe(pts));
    }
}
BENCHMARK(BM_FitFringe);

void BM_Assign(benchmark::State& state) {
    magsim::GridGeometry geom;
    magsim::Rng rng(42);
    const auto occ = magsim::stochastic_load(geom, 0.5, rng);
    const auto pattern = magsim::TargetPattern::rect(geom, 3, 4, 6, 8);
    for (auto _ : state) {
        benchmark::DoNotOptimize(magsim::assign(geom, occ, pattern));
    }
}
BENCHMARK(BM_Assign);

}  // namespace

BENCHMARK_MAIN();
