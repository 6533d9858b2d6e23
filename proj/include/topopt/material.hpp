#pragma once

#include <Eigen/Dense>

namespace topopt {

enum class Interpolation { linear, simp };

/// Two-phase isotropic plane-stress material. The soft phase E1 stands in
/// for void.
struct MaterialModel {
    double E0 = 210e9;
    double E1 = 210e3;
    double nu = 0.33;
    double p = 3.0;
    Interpolation mode = Interpolation::simp;
};

/// Validates the model; linear mode forces p = 1.
MaterialModel make_material(double E0, double E1, double nu, double p, Interpolation mode);

void validate(const MaterialModel& m);

/// E(t) = E1 + t^p (E0 - E1), with p = 1 in linear mode.
double interpolate_E(const MaterialModel& m, double t);

/// dE/dt.
double interpolate_dE(const MaterialModel& m, double t);

/// Plane-stress matrix E(t) / (1 - nu^2) [[1, nu, 0], [nu, 1, 0], [0, 0, (1 - nu) / 2]].
Eigen::Matrix3d constitutive_matrix(const MaterialModel& m, double t);

/// Same matrix for an explicit modulus.
Eigen::Matrix3d plane_stress_matrix(double E, double nu);

}  // namespace topopt
