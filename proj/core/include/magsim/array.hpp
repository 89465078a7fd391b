#pragma once

#include <Eigen/Dense>
#include <vector>

#include "magsim/rng.hpp"

namespace magsim {

// Rectangular sensor grid; default is the 18 x 15 array at 7.0 um pitch
// (extent 119 um x 98 um), origin at (row 0, col 0).
struct GridGeometry {
    int rows = 15;
    int cols = 18;
    double pitch = 7.0e-6;  // m
    Eigen::Vector2d origin = Eigen::Vector2d::Zero();

    int site_count() const { return rows * cols; }
    int site_index(int row, int col) const;
    std::pair<int, int> row_col(int site) const;
    Eigen::Vector2d site_position(int row, int col) const;
    Eigen::Vector2d site_position(int site) const;
    Eigen::Vector2d extent() const {
        return {(cols - 1) * pitch, (rows - 1) * pitch};
    }
    Eigen::Vector2d center() const { return origin + 0.5 * extent(); }
};

struct SiteProperties {
    double light_shift_offset = 0.0;       // rad/s, frozen per experiment
    double detection_true_positive = 0.99;
    double detection_false_positive = 0.005;
    double survival_probability = 0.99;    // per cycle
};

// At most one atom per site, by construction.
class Occupancy {
public:
    Occupancy() = default;
    explicit Occupancy(int sites) : occupied_(sites, 0) {}

    int size() const { return static_cast<int>(occupied_.size()); }
    bool occupied(int site) const { return occupied_.at(site) != 0; }
    void set(int site, bool value) { occupied_.at(site) = value ? 1 : 0; }
    int count() const;
    bool operator==(const Occupancy&) const = default;

private:
    std::vector<uint8_t> occupied_;
};

// Independent Bernoulli(p_load) per site, in site order, from the given stream.
Occupancy stochastic_load(const GridGeometry& geom, double p_load, Rng& rng);

// Per-site light-shift offsets i.i.d. Gaussian(mean, spread); detection and
// survival parameters are copied from the shared defaults.
std::vector<SiteProperties> draw_site_properties(const GridGeometry& geom,
                                                 double mean_light_shift,
                                                 double light_shift_spread,
                                                 const SiteProperties& detection_defaults,
                                                 Rng& rng);

// Thermal rms localization in a Gaussian tweezer, harmonic approximation:
// sigma = waist * sqrt(kB T / 4U) per axis, reported as area (2 sigma)^2.
// trap_depth is in kelvin (U / kB). Throws when T >= trap depth.
double localization_area(double temperature, double trap_depth, double waist);

// Movable tweezer with a square addressable window centered on the array.
struct SteerableTweezer {
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    Eigen::Vector2d window_center = Eigen::Vector2d::Zero();
    double window_size = 400e-6;      // m, full width
    double waist = 2.0e-6;            // m
    double step_resolution = 100e-9;  // m

    bool contains(const Eigen::Vector2d& p) const {
        return std::abs(p.x() - window_center.x()) <= 0.5 * window_size &&
               std::abs(p.y() - window_center.y()) <= 0.5 * window_size;
    }

    static SteerableTweezer centered_on(const GridGeometry& geom) {
        SteerableTweezer t;
        t.window_center = geom.center();
        t.position = t.window_center;
        return t;
    }
};

}  // namespace magsim
