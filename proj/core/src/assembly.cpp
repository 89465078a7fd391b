#include "magsim/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "magsim/errors.hpp"

namespace magsim {

namespace {

// Kuhn-Munkres on a square matrix, O(n^3); returns row -> column.
std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = std::numeric_limits<double>::infinity();
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

bool path_clear(const GridGeometry& geom, const Occupancy& occ,
                const Eigen::Vector2d& from, const Eigen::Vector2d& to, int ignore_a,
                int ignore_b, double blocking_radius) {
    for (int s = 0; s < occ.size(); ++s) {
        if (!occ.occupied(s) || s == ignore_a || s == ignore_b) continue;
        if (segment_point_distance(from, to, geom.site_position(s)) < blocking_radius)
            return false;
    }
    return true;
}

std::vector<int> blockers_on_path(const GridGeometry& geom, const Occupancy& occ,
                                  const Eigen::Vector2d& from, const Eigen::Vector2d& to,
                                  int ignore_a, int ignore_b, double blocking_radius) {
    std::vector<int> result;
    for (int s = 0; s < occ.size(); ++s) {
        if (!occ.occupied(s) || s == ignore_a || s == ignore_b) continue;
        if (segment_point_distance(from, to, geom.site_position(s)) < blocking_radius)
            result.push_back(s);
    }
    return result;
}

}  // namespace

double segment_point_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                              const Eigen::Vector2d& p) {
    const Eigen::Vector2d ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0.0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

TargetPattern TargetPattern::rect(const GridGeometry& geom, int row0, int col0, int height,
                                  int width) {
    TargetPattern pattern;
    for (int r = row0; r < row0 + height; ++r)
        for (int c = col0; c < col0 + width; ++c) pattern.sites.push_back(geom.site_index(r, c));
    return pattern;
}

bool TargetPattern::filled_by(const Occupancy& occ) const {
    return std::all_of(sites.begin(), sites.end(), [&](int s) { return occ.occupied(s); });
}

Matching assign(const GridGeometry& geom, const Occupancy& occ, const TargetPattern& pattern) {
    Matching matching;
    std::vector<char> is_target(geom.site_count(), 0);
    for (int t : pattern.sites) {
        if (t < 0 || t >= geom.site_count())
            throw std::invalid_argument("assign: pattern site out of grid");
        if (is_target[t]) throw std::invalid_argument("assign: duplicate pattern site");
        is_target[t] = 1;
    }

    std::vector<int> free_atoms;
    std::vector<int> open_targets;
    for (int t : pattern.sites) {
        if (occ.occupied(t))
            matching.pairs.emplace_back(t, t);  // already in place, zero cost
        else
            open_targets.push_back(t);
    }
    for (int s = 0; s < geom.site_count(); ++s)
        if (occ.occupied(s) && !is_target[s]) free_atoms.push_back(s);

    const int na = static_cast<int>(free_atoms.size());
    const int nt = static_cast<int>(open_targets.size());
    if (na == 0 || nt == 0) {
        matching.unfilled = nt;
        return matching;
    }

    // Pad to square with zero-cost dummies; dummy assignments park surplus
    // atoms (na > nt) or leave targets open (na < nt).
    const int n = std::max(na, nt);
    std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nt; ++j)
            cost[i][j] =
                (geom.site_position(free_atoms[i]) - geom.site_position(open_targets[j])).norm();
    const auto row_to_col = min_cost_assignment(cost);
    for (int i = 0; i < na; ++i) {
        const int j = row_to_col[i];
        if (j < nt) {
            matching.pairs.emplace_back(free_atoms[i], open_targets[j]);
            matching.cost += cost[i][j];
        }
    }
    matching.unfilled = std::max(0, nt - na);
    return matching;
}

MovePlan sequence_moves(const GridGeometry& geom, const Matching& matching,
                        const Occupancy& occ, double blocking_radius) {
    MovePlan plan;
    Occupancy state = occ;
    std::vector<std::pair<int, int>> pending;
    for (const auto& [s, t] : matching.pairs) {
        if (s == t) continue;
        if (!state.occupied(s))
            throw std::invalid_argument("sequence_moves: source site not occupied");
        pending.emplace_back(s, t);
    }

    auto emit = [&](int s, int t, std::vector<Eigen::Vector2d> waypoints) {
        Move move{s, t, std::move(waypoints), 0.0};
        Eigen::Vector2d prev = geom.site_position(s);
        for (const auto& w : move.waypoints) {
            move.length += (w - prev).norm();
            prev = w;
        }
        move.length += (geom.site_position(t) - prev).norm();
        plan.total_length += move.length;
        state.set(s, false);
        state.set(t, true);
        plan.moves.push_back(std::move(move));
    };

    while (!pending.empty()) {
        bool advanced = false;
        for (size_t i = 0; i < pending.size(); ++i) {
            const auto [s, t] = pending[i];
            if (path_clear(geom, state, geom.site_position(s), geom.site_position(t), s, t,
                           blocking_radius)) {
                emit(s, t, {});
                pending.erase(pending.begin() + static_cast<long>(i));
                advanced = true;
                break;
            }
        }
        if (advanced) continue;

        // Everything is blocked; detour the move with the fewest blockers
        // around its first blocker via a single perpendicular waypoint.
        size_t best = 0;
        size_t best_blockers = std::numeric_limits<size_t>::max();
        for (size_t i = 0; i < pending.size(); ++i) {
            const auto [s, t] = pending[i];
            const auto blockers = blockers_on_path(geom, state, geom.site_position(s),
                                                   geom.site_position(t), s, t, blocking_radius);
            if (blockers.size() < best_blockers) {
                best_blockers = blockers.size();
                best = i;
            }
        }
        const auto [s, t] = pending[best];
        const Eigen::Vector2d from = geom.site_position(s);
        const Eigen::Vector2d to = geom.site_position(t);
        const auto blockers =
            blockers_on_path(geom, state, from, to, s, t, blocking_radius);
        const Eigen::Vector2d bpos = geom.site_position(blockers.front());
        Eigen::Vector2d dir = to - from;
        if (dir.norm() == 0.0)
            throw std::invalid_argument("sequence_moves: zero-length move");
        dir.normalize();
        const Eigen::Vector2d perp(-dir.y(), dir.x());

        bool placed = false;
        for (const double side : {1.0, -1.0}) {
            const Eigen::Vector2d w = bpos + side * 2.0 * blocking_radius * perp;
            if (path_clear(geom, state, from, w, s, t, blocking_radius) &&
                path_clear(geom, state, w, to, s, t, blocking_radius)) {
                emit(s, t, {w});
                pending.erase(pending.begin() + static_cast<long>(best));
                placed = true;
                break;
            }
        }
        if (!placed)
            throw UnreachablePlanError("sequence_moves: move " + std::to_string(s) + " -> " +
                                           std::to_string(t) +
                                           " has no clear path, waypoint also blocked",
                                       s, t);
    }
    return plan;
}

ExecutionResult execute_plan(const GridGeometry& geom, const MovePlan& plan, Occupancy occ,
                             double p_move_success, Rng& rng) {
    (void)geom;
    ExecutionResult result{std::move(occ), 0, 0};
    for (const auto& move : plan.moves) {
        if (!result.occupancy.occupied(move.source))
            throw std::logic_error("execute_plan: source not occupied");
        if (result.occupancy.occupied(move.target))
            throw std::logic_error("execute_plan: target already occupied");
        result.occupancy.set(move.source, false);
        if (rng.bernoulli(p_move_success)) {
            result.occupancy.set(move.target, true);
            ++result.completed;
        } else {
            ++result.losses;  // atom lost in transport
        }
    }
    return result;
}

AssemblyStats repeated_assembly(const GridGeometry& geom, const TargetPattern& pattern,
                                const AssemblyParams& params, int max_rounds, Rng& rng) {
    if (max_rounds < 1) throw std::invalid_argument("repeated_assembly: max_rounds < 1");
    AssemblyStats stats;
    std::vector<char> is_target(geom.site_count(), 0);
    for (int t : pattern.sites) is_target[t] = 1;

    Occupancy occ = stochastic_load(geom, params.p_load, rng);
    for (int round = 1; round <= max_rounds; ++round) {
        const Matching matching = assign(geom, occ, pattern);
        const MovePlan plan = sequence_moves(geom, matching, occ, params.blocking_radius);
        auto result = execute_plan(geom, plan, occ, params.p_move_success, rng);
        occ = std::move(result.occupancy);
        stats.total_moves += static_cast<int>(plan.moves.size());
        stats.total_losses += result.losses;

        ++stats.rounds;
        if (pattern.filled_by(occ)) {
            ++stats.full_rounds;
            if (stats.first_full_round < 0) stats.first_full_round = round;
        }

        if (round == max_rounds) break;
        // Measurement-cycle attrition on retained atoms, then a fresh load of
        // the reservoir (non-target) sites.
        for (int s = 0; s < geom.site_count(); ++s) {
            if (occ.occupied(s) && !rng.bernoulli(params.survival_per_round)) occ.set(s, false);
        }
        for (int s = 0; s < geom.site_count(); ++s) {
            if (!is_target[s]) occ.set(s, rng.bernoulli(params.p_load));
        }
    }
    stats.duty_cycle = static_cast<double>(stats.full_rounds) / stats.rounds;
    return stats;
}

}  // namespace magsim
