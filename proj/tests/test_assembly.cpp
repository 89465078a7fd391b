#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "magsim/assembly.hpp"
#include "magsim/errors.hpp"
#include "oracles.hpp"

using namespace magsim;

namespace {

Occupancy occupancy_of(const GridGeometry& geom, const std::vector<int>& sites) {
    Occupancy occ(geom.site_count());
    for (int s : sites) occ.set(s, true);
    return occ;
}

std::vector<Eigen::Vector2d> positions_of(const GridGeometry& geom, const std::vector<int>& s) {
    std::vector<Eigen::Vector2d> out;
    for (int i : s) out.push_back(geom.site_position(i));
    return out;
}

// Random instance: distinct occupied sites and a disjoint-ish pattern.
struct Instance {
    Occupancy occ;
    TargetPattern pattern;
    std::vector<int> atoms;
};

Instance random_instance(const GridGeometry& geom, int n_atoms, int n_targets, Rng& rng) {
    Instance inst;
    inst.occ = Occupancy(geom.site_count());
    std::vector<int> all(geom.site_count());
    for (int i = 0; i < geom.site_count(); ++i) all[i] = i;
    rng.shuffle(all);
    for (int i = 0; i < n_atoms; ++i) {
        inst.occ.set(all[i], true);
        inst.atoms.push_back(all[i]);
    }
    for (int i = 0; i < n_targets; ++i)
        inst.pattern.sites.push_back(all[n_atoms + i]);  // targets start empty
    return inst;
}

}  // namespace

TEST_CASE("already-assembled pattern needs no moves") {
    const GridGeometry geom;
    const TargetPattern pattern = TargetPattern::rect(geom, 6, 7, 3, 3);
    Occupancy occ = occupancy_of(geom, pattern.sites);
    const Matching m = assign(geom, occ, pattern);
    CHECK(m.cost == 0.0);
    CHECK(m.unfilled == 0);
    for (const auto& [s, t] : m.pairs) CHECK(s == t);
    const MovePlan plan = sequence_moves(geom, m, occ, 2e-6);
    CHECK(plan.moves.empty());
}

TEST_CASE("single atom three sites away costs 21 um") {
    const GridGeometry geom;
    Occupancy occ(geom.site_count());
    occ.set(geom.site_index(4, 2), true);
    TargetPattern pattern;
    pattern.sites = {geom.site_index(4, 5)};
    const Matching m = assign(geom, occ, pattern);
    CHECK(m.pairs.size() == 1);
    CHECK(m.cost == doctest::Approx(21e-6).epsilon(1e-12));
}

TEST_CASE("assignment matches the brute-force optimum") {
    const GridGeometry geom;
    Rng rng(314159);
    for (int trial = 0; trial < 250; ++trial) {
        const int n_atoms = 1 + static_cast<int>(rng.uniform_int(7));
        const int n_targets = 1 + static_cast<int>(rng.uniform_int(6));
        Instance inst = random_instance(geom, n_atoms, n_targets, rng);
        const Matching m = assign(geom, inst.occ, inst.pattern);
        const double brute = oracle::brute_force_matching_cost(
            positions_of(geom, inst.atoms), positions_of(geom, inst.pattern.sites));
        CHECK(m.cost == doctest::Approx(brute).epsilon(1e-9));
        CHECK(m.unfilled == std::max(0, n_targets - n_atoms));
    }
}

TEST_CASE("assignment cost is translation invariant and beats greedy") {
    GridGeometry geom;
    Rng rng(77);
    for (int trial = 0; trial < 40; ++trial) {
        Instance inst = random_instance(geom, 6, 5, rng);
        const Matching base = assign(geom, inst.occ, inst.pattern);

        GridGeometry shifted = geom;
        shifted.origin = Eigen::Vector2d(3.2e-6, -8.9e-6);
        const Matching moved = assign(shifted, inst.occ, inst.pattern);
        CHECK(moved.cost == doctest::Approx(base.cost).epsilon(1e-9));

        // Greedy nearest-target matching never beats the optimum.
        std::vector<int> atoms = inst.atoms;
        double greedy = 0.0;
        for (int t : inst.pattern.sites) {
            if (atoms.empty()) break;
            auto best = std::min_element(atoms.begin(), atoms.end(), [&](int a, int b) {
                return (geom.site_position(a) - geom.site_position(t)).norm() <
                       (geom.site_position(b) - geom.site_position(t)).norm();
            });
            greedy += (geom.site_position(*best) - geom.site_position(t)).norm();
            atoms.erase(best);
        }
        CHECK(base.cost <= greedy + 1e-12);
    }
}

TEST_CASE("sequencing keeps clear corridors order-independent") {
    const GridGeometry geom;
    // Two moves in separate rows, no interference.
    Occupancy occ(geom.site_count());
    occ.set(geom.site_index(2, 0), true);
    occ.set(geom.site_index(9, 0), true);
    Matching m;
    m.pairs = {{geom.site_index(2, 0), geom.site_index(2, 3)},
               {geom.site_index(9, 0), geom.site_index(9, 2)}};
    const MovePlan plan = sequence_moves(geom, m, occ, 2e-6);
    CHECK(plan.moves.size() == 2);
    CHECK(plan.total_length == doctest::Approx(21e-6 + 14e-6).epsilon(1e-12));
    for (const auto& move : plan.moves) CHECK(move.waypoints.empty());
    CHECK(oracle::verify_plan(geom, occ, plan, 2e-6));
}

TEST_CASE("mutually blocked moves resolve with a single waypoint") {
    // Column geometry: both direct paths run through the other move's source.
    const GridGeometry geom;
    const int s1 = geom.site_index(1, 0);
    const int s2 = geom.site_index(2, 0);
    const int t1 = geom.site_index(3, 0);
    const int t2 = geom.site_index(0, 0);
    Occupancy occ(geom.site_count());
    occ.set(s1, true);
    occ.set(s2, true);
    Matching m;
    m.pairs = {{s1, t1}, {s2, t2}};  // s1 passes s2, s2 passes s1
    const MovePlan plan = sequence_moves(geom, m, occ, 2e-6);
    CHECK(plan.moves.size() == 2);
    int waypoint_moves = 0;
    for (const auto& move : plan.moves) waypoint_moves += !move.waypoints.empty();
    CHECK(waypoint_moves == 1);
    CHECK(oracle::verify_plan(geom, occ, plan, 2e-6));
}

TEST_CASE("blocked move with both detours blocked is reported") {
    GridGeometry geom;
    geom.rows = 5;
    geom.cols = 3;
    geom.pitch = 4e-6;
    geom.origin = Eigen::Vector2d(-4e-6, 0.0);
    const int src = geom.site_index(0, 1);     // (0, 0)
    const int dst = geom.site_index(4, 1);     // (0, 16e-6)
    const int mid = geom.site_index(2, 1);     // directly on the path
    const int left = geom.site_index(2, 0);    // at the -side waypoint
    const int right = geom.site_index(2, 2);   // at the +side waypoint
    Occupancy occ(geom.site_count());
    for (int s : {src, mid, left, right}) occ.set(s, true);
    Matching m;
    m.pairs = {{src, dst}};
    try {
        sequence_moves(geom, m, occ, 2e-6);
        FAIL("expected UnreachablePlanError");
    } catch (const UnreachablePlanError& e) {
        CHECK(e.source_site == src);
        CHECK(e.target_site == dst);
    }
}

TEST_CASE("random instances always produce geometrically valid plans") {
    const GridGeometry geom;
    Rng rng(2718);
    for (int trial = 0; trial < 150; ++trial) {
        Occupancy occ = stochastic_load(geom, 0.4, rng);
        const int r0 = static_cast<int>(rng.uniform_int(12));
        const int c0 = static_cast<int>(rng.uniform_int(15));
        const TargetPattern pattern = TargetPattern::rect(geom, r0, c0, 3, 3);
        const Matching m = assign(geom, occ, pattern);
        const MovePlan plan = sequence_moves(geom, m, occ, 2e-6);
        CHECK(oracle::verify_plan(geom, occ, plan, 2e-6));
    }
}

TEST_CASE("execution extremes") {
    const GridGeometry geom;
    Rng rng(4);
    Occupancy occ = stochastic_load(geom, 0.6, rng);
    const TargetPattern pattern = TargetPattern::rect(geom, 5, 6, 3, 3);
    const Matching m = assign(geom, occ, pattern);
    const MovePlan plan = sequence_moves(geom, m, occ, 2e-6);

    Rng exec_rng(1);
    const auto sure = execute_plan(geom, plan, occ, 1.0, exec_rng);
    CHECK(sure.losses == 0);
    CHECK(pattern.filled_by(sure.occupancy));

    const auto never = execute_plan(geom, plan, occ, 0.0, exec_rng);
    CHECK(never.completed == 0);
    CHECK(never.losses == static_cast<int>(plan.moves.size()));
    for (const auto& move : plan.moves) CHECK(!never.occupancy.occupied(move.target));
}

TEST_CASE("stochastic execution matches the analytic fill rate") {
    // A fixed instance whose plan has a known number of moves; the pattern
    // fills iff every move succeeds.
    const GridGeometry geom;
    Occupancy occ(geom.site_count());
    const TargetPattern pattern = TargetPattern::rect(geom, 6, 7, 3, 3);
    // Five atoms already inside, four outside.
    for (int i = 0; i < 5; ++i) occ.set(pattern.sites[i], true);
    const std::vector<int> outside = {geom.site_index(0, 0), geom.site_index(1, 15),
                                      geom.site_index(13, 2), geom.site_index(14, 17)};
    for (int s : outside) occ.set(s, true);
    const Matching m = assign(geom, occ, pattern);
    const MovePlan plan = sequence_moves(geom, m, occ, 2e-6);
    REQUIRE(plan.moves.size() == 4);

    const double p = 0.95;
    const int trials = 10000;
    Rng rng(31337);
    int full = 0;
    for (int i = 0; i < trials; ++i) {
        const auto result = execute_plan(geom, plan, occ, p, rng);
        full += pattern.filled_by(result.occupancy);
    }
    const double expect = std::pow(p, 4);
    const double sigma = std::sqrt(expect * (1.0 - expect) / trials);
    CHECK(std::abs(full / static_cast<double>(trials) - expect) < 5.0 * sigma);
}

TEST_CASE("occupancy invariant holds through execution") {
    const GridGeometry geom;
    Rng rng(88);
    for (int trial = 0; trial < 30; ++trial) {
        Occupancy occ = stochastic_load(geom, 0.5, rng);
        const TargetPattern pattern = TargetPattern::rect(geom, 6, 7, 3, 3);
        const int before = occ.count();
        const Matching m = assign(geom, occ, pattern);
        const MovePlan plan = sequence_moves(geom, m, occ, 2e-6);
        const auto result = execute_plan(geom, plan, occ, 0.9, rng);
        CHECK(result.occupancy.count() == before - result.losses);
        for (int s = 0; s < geom.site_count(); ++s)
            CHECK((result.occupancy.occupied(s) == true ||
                   result.occupancy.occupied(s) == false));
    }
}

TEST_CASE("repeated assembly extremes") {
    const GridGeometry geom;
    const TargetPattern pattern = TargetPattern::rect(geom, 6, 7, 3, 3);

    AssemblyParams sure;
    sure.p_load = 1.0;
    sure.p_move_success = 1.0;
    sure.survival_per_round = 1.0;
    Rng rng(9);
    const AssemblyStats stats = repeated_assembly(geom, pattern, sure, 3, rng);
    CHECK(stats.first_full_round == 1);
    CHECK(stats.duty_cycle == 1.0);

    AssemblyParams starved;
    starved.p_load = 0.0;
    Rng rng2(10);
    const AssemblyStats empty = repeated_assembly(geom, pattern, starved, 5, rng2);
    CHECK(empty.first_full_round == -1);
    CHECK(empty.duty_cycle == 0.0);
}

TEST_CASE("duty cycle is seed-consistent within Monte Carlo error") {
    const GridGeometry geom;
    const TargetPattern pattern = TargetPattern::rect(geom, 6, 7, 3, 3);
    AssemblyParams params;  // p_load 0.5, p_move 0.98
    params.p_move_success = 0.98;
    const int rounds = 1500;
    Rng a(123), b(987654321);
    const double d1 = repeated_assembly(geom, pattern, params, rounds, a).duty_cycle;
    const double d2 = repeated_assembly(geom, pattern, params, rounds, b).duty_cycle;
    const double pooled = 0.5 * (d1 + d2);
    const double sigma = std::sqrt(2.0 * pooled * (1.0 - pooled) / rounds);
    CHECK(std::abs(d1 - d2) < 5.0 * std::max(sigma, 1e-3));
    CHECK(pooled > 0.5);  // assembly should keep the pattern mostly full
}
