#pragma once

#include <Eigen/Dense>
#include <vector>

#include "magsim/array.hpp"
#include "magsim/rng.hpp"

namespace magsim {

// Target sites to populate, e.g. a 3x3 block.
struct TargetPattern {
    std::vector<int> sites;  // distinct, in-grid

    static TargetPattern rect(const GridGeometry& geom, int row0, int col0, int height,
                              int width);
    bool filled_by(const Occupancy& occ) const;
};

struct Matching {
    // (source site, target site); source == target marks an atom already in place.
    std::vector<std::pair<int, int>> pairs;
    double cost = 0.0;       // total Euclidean distance of the non-trivial moves
    int unfilled = 0;        // targets left without an atom (partial fill)
};

struct Move {
    int source = -1;
    int target = -1;
    std::vector<Eigen::Vector2d> waypoints;  // at most one detour point
    double length = 0.0;
};

struct MovePlan {
    std::vector<Move> moves;  // execution order
    double total_length = 0.0;
};

struct ExecutionResult {
    Occupancy occupancy;
    int losses = 0;
    int completed = 0;
};

struct AssemblyStats {
    int rounds = 0;
    int full_rounds = 0;
    double duty_cycle = 0.0;    // fraction of rounds ending with a full pattern
    int first_full_round = -1;  // 1-based; -1 when never full
    int total_moves = 0;
    int total_losses = 0;
};

// Min-cost maximum matching of loaded atoms onto the pattern (Euclidean
// distance). Atoms already on targets stay in place at zero cost, which an
// exchange argument shows is always optimal for this metric. When atoms are
// scarce the matching is partial and `unfilled` reports the deficit.
Matching assign(const GridGeometry& geom, const Occupancy& occ, const TargetPattern& pattern);

// Order the moves so every straight segment clears occupied, non-participating
// sites by >= blocking_radius. A move blocked in every order gets a single
// perpendicular waypoint offset 2 * blocking_radius from the first blocker;
// if both detour sides are blocked too, throws UnreachablePlanError.
MovePlan sequence_moves(const GridGeometry& geom, const Matching& matching,
                        const Occupancy& occ, double blocking_radius);

// Execute moves in plan order; each succeeds with p_move_success, failure
// removes the atom. Operates on a private copy of the occupancy.
ExecutionResult execute_plan(const GridGeometry& geom, const MovePlan& plan, Occupancy occ,
                             double p_move_success, Rng& rng);

struct AssemblyParams {
    double p_load = 0.5;
    double p_move_success = 0.98;
    double survival_per_round = 0.99;  // applied to retained atoms each round
    double blocking_radius = 2.0e-6;   // m
};

// Round loop: cull by survival, reload non-target sites, assign/sequence/
// execute, record whether the pattern ended full. Runs max_rounds rounds and
// reports duty-cycle statistics.
AssemblyStats repeated_assembly(const GridGeometry& geom, const TargetPattern& pattern,
                                const AssemblyParams& params, int max_rounds, Rng& rng);

// Shortest distance from point p to segment [a, b].
double segment_point_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                              const Eigen::Vector2d& p);

}  // namespace magsim
