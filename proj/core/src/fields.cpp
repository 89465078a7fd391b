#include "magsim/fields.hpp"

#include <cmath>
#include <stdexcept>

namespace magsim {

FieldScene FieldScene::paper_default() {
    FieldScene scene;
    scene.quantization = QuantizationField{283e-6, Eigen::Vector3d::UnitX()};
    scene.test = QuadrupoleField{};  // 77.3 nT/um, zero crossing at x = 28 um
    return scene;
}

Eigen::Vector3d field_at(const FieldScene& scene, const Eigen::Vector3d& r, bool test_on) {
    Eigen::Vector3d b = scene.quantization.magnitude * scene.quantization.axis +
                        scene.uniform_offset;
    if (test_on && scene.test.enabled) b += scene.test.evaluate(r);
    return b;
}

double effective_field_magnitude(const FieldScene& scene, const Eigen::Vector3d& r,
                                 bool test_on) {
    return field_at(scene, r, test_on).norm();
}

QuadrupoleField solve_scene_from_map(std::span<const std::pair<double, double>> axis_values) {
    if (axis_values.size() < 2)
        throw std::invalid_argument("solve_scene_from_map: need at least 2 samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(axis_values.size());
    for (const auto& [x, db] : axis_values) {
        sx += x;
        sy += db;
        sxx += x * x;
        sxy += x * db;
    }
    const double det = n * sxx - sx * sx;
    if (!std::isfinite(det) || det <= 1e-12 * n * sxx)
        throw std::invalid_argument("solve_scene_from_map: degenerate x values, unsolvable");
    const double slope = (n * sxy - sx * sy) / det;
    const double intercept = (sy * sxx - sx * sxy) / det;

    QuadrupoleField quad;
    quad.axial_gradient = slope;
    quad.enabled = true;
    // Put the axial zero crossing where the fitted line vanishes; keep the
    // default transverse center.
    if (slope != 0.0) quad.center.x() = -intercept / slope;
    return quad;
}

}  // namespace magsim
