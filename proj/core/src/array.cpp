#include "magsim/array.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace magsim {

int GridGeometry::site_index(int row, int col) const {
    if (row < 0 || row >= rows || col < 0 || col >= cols)
        throw std::out_of_range("GridGeometry: site index out of range");
    return row * cols + col;
}

std::pair<int, int> GridGeometry::row_col(int site) const {
    if (site < 0 || site >= site_count())
        throw std::out_of_range("GridGeometry: site index out of range");
    return {site / cols, site % cols};
}

Eigen::Vector2d GridGeometry::site_position(int row, int col) const {
    (void)site_index(row, col);
    return origin + Eigen::Vector2d(col * pitch, row * pitch);
}

Eigen::Vector2d GridGeometry::site_position(int site) const {
    const auto [row, col] = row_col(site);
    return site_position(row, col);
}

int Occupancy::count() const {
    return std::accumulate(occupied_.begin(), occupied_.end(), 0);
}

Occupancy stochastic_load(const GridGeometry& geom, double p_load, Rng& rng) {
    if (p_load < 0.0 || p_load > 1.0)
        throw std::invalid_argument("stochastic_load: p_load outside [0,1]");
    Occupancy occ(geom.site_count());
    for (int s = 0; s < geom.site_count(); ++s) occ.set(s, rng.bernoulli(p_load));
    return occ;
}

std::vector<SiteProperties> draw_site_properties(const GridGeometry& geom,
                                                 double mean_light_shift,
                                                 double light_shift_spread,
                                                 const SiteProperties& detection_defaults,
                                                 Rng& rng) {
    if (light_shift_spread < 0.0)
        throw std::invalid_argument("draw_site_properties: negative spread");
    std::vector<SiteProperties> props(geom.site_count(), detection_defaults);
    for (auto& p : props) p.light_shift_offset = rng.gaussian(mean_light_shift, light_shift_spread);
    return props;
}

double localization_area(double temperature, double trap_depth, double waist) {
    if (temperature < 0.0 || trap_depth <= 0.0 || waist <= 0.0)
        throw std::invalid_argument("localization_area: nonpositive input");
    if (temperature >= trap_depth)
        throw std::domain_error("localization_area: temperature above trap depth, out of harmonic regime");
    const double sigma = waist * std::sqrt(temperature / (4.0 * trap_depth));
    return (2.0 * sigma) * (2.0 * sigma);
}

}  // namespace magsim
