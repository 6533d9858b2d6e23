#include "topopt/material.hpp"

#include <cmath>
#include <string>

#include "topopt/errors.hpp"

namespace topopt {

namespace {

void check_density(double t) {
    if (!(t >= 0.0 && t <= 1.0))
        throw InvalidArgument("material: density " + std::to_string(t) + " outside [0, 1]");
}

double exponent(const MaterialModel& m) { return m.mode == Interpolation::linear ? 1.0 : m.p; }

}  // namespace

void validate(const MaterialModel& m) {
    if (!(m.E1 > 0.0) || !(m.E0 > m.E1)) throw InvalidArgument("material: require E0 > E1 > 0");
    if (!(m.nu >= 0.0 && m.nu < 0.5)) throw InvalidArgument("material: require 0 <= nu < 0.5");
    if (!(m.p >= 1.0)) throw InvalidArgument("material: require p >= 1");
    if (m.mode == Interpolation::linear && m.p != 1.0) throw InvalidArgument("material: linear mode requires p = 1");
}

MaterialModel make_material(double E0, double E1, double nu, double p, Interpolation mode) {
    MaterialModel m{E0, E1, nu, mode == Interpolation::linear ? 1.0 : p, mode};
    validate(m);
    return m;
}

double interpolate_E(const MaterialModel& m, double t) {
    check_density(t);
    const double p = exponent(m);
    const double w = p == 1.0 ? t : std::pow(t, p);
    return m.E1 + w * (m.E0 - m.E1);
}

double interpolate_dE(const MaterialModel& m, double t) {
    check_density(t);
    const double p = exponent(m);
    if (p == 1.0) return m.E0 - m.E1;
    return p * std::pow(t, p - 1.0) * (m.E0 - m.E1);
}

Eigen::Matrix3d plane_stress_matrix(double E, double nu) {
    Eigen::Matrix3d H;
    H << 1.0, nu, 0.0,
         nu, 1.0, 0.0,
         0.0, 0.0, 0.5 * (1.0 - nu);
    return (E / (1.0 - nu * nu)) * H;
}

Eigen::Matrix3d constitutive_matrix(const MaterialModel& m, double t) {
    return plane_stress_matrix(interpolate_E(m, t), m.nu);
}

}  // namespace topopt
