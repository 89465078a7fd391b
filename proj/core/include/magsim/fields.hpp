#pragma once

#include <Eigen/Dense>
#include <span>
#include <utility>

namespace magsim {

// Homogeneous quantization field |B_q| along a unit axis.
struct QuantizationField {
    double magnitude = 283e-6;  // T
    Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
};

// Anti-Helmholtz quadrupole test field, divergence-free by construction:
//   B(r) = g (a . d) a - g/2 (d - (a . d) a),  d = r - center.
// Transverse gradients are -g/2 on both axes perpendicular to a.
struct QuadrupoleField {
    Eigen::Vector3d center{28e-6, 49e-6, 0.0};  // m
    Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
    double axial_gradient = 0.0773;  // T/m (77.3 nT/um)
    bool enabled = true;

    Eigen::Vector3d evaluate(const Eigen::Vector3d& r) const {
        const Eigen::Vector3d d = r - center;
        const double axial = axis.dot(d);
        return axial_gradient * axial * axis -
               0.5 * axial_gradient * (d - axial * axis);
    }
};

struct FieldScene {
    QuantizationField quantization;
    QuadrupoleField test;
    Eigen::Vector3d uniform_offset = Eigen::Vector3d::Zero();

    static FieldScene paper_default();
};

// Vector sum of the quantization field, the quadrupole (when both the scene
// enables it and the cycle gate is on), and the uniform offset.
Eigen::Vector3d field_at(const FieldScene& scene, const Eigen::Vector3d& r, bool test_on = true);

double effective_field_magnitude(const FieldScene& scene, const Eigen::Vector3d& r,
                                 bool test_on = true);

// Configure a quadrupole whose axis-component shift reproduces the
// least-squares line through (x, dB) samples. Throws on degenerate input.
QuadrupoleField solve_scene_from_map(std::span<const std::pair<double, double>> axis_values);

}  // namespace magsim
