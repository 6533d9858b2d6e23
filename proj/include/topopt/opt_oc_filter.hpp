#pragma once

#include <span>
#include <vector>

#include "topopt/opt_dual_lp.hpp"

namespace topopt {

struct FilterSpec {
    double rmin = 1.5;  ///< radius in element units
};

struct OcConfig {
    double t1 = 0.5;
    FilterSpec filter;
    double move = 0.2;
    double eta = 0.5;
    double change_tol = 0.01;
    int max_iterations = 200;
    double t_floor = 1e-3;
    SolverOptions solver;
};

void validate(const OcConfig& cfg, const GridMesh& mesh);

/// Mesh-independency sensitivity filter with cone weights rmin - dist over
/// active neighbours within rmin (distances between centers in element units):
///   g'_e = sum_i w_ei t_i g_i / (t_e sum_i w_ei)
std::vector<double> filter_sensitivities(const GridMesh& mesh, const DensityField& field, std::span<const double> g,
                                         const FilterSpec& spec);

/// One OC candidate at a fixed multiplier lambda, before volume matching.
std::vector<double> oc_step(const DensityField& t_prev, std::span<const double> g, double lambda, double move,
                            double eta);

/// Optimality-criteria update t_e * (-g_e / lambda)^eta clamped to the move
/// window, with lambda bisected in [1e-12, 1e12] until the volume matches
/// t1 |Omega_active| to 1e-6 relative.
DensityField oc_update(const DensityField& t_prev, std::span<const double> g_filtered, double t1, double move = 0.2,
                       double eta = 0.5);

/// Volume-constrained OC iteration with sensitivity filtering at a fixed
/// volume fraction.
OptRun run_oc(const GridMesh& mesh, const BoundaryConditions& bc, const MaterialModel& mat, const OcConfig& cfg);

}  // namespace topopt
