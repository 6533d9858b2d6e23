#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "topopt/density.hpp"
#include "topopt/fem_core.hpp"
#include "topopt/material.hpp"
#include "topopt/mesh_bc.hpp"

namespace topopt {

struct OptConfig {
    double t1_target = 0.5;
    double t1_start = 0.95;       ///< continuation start; equal to t1_target disables continuation
    int stages = 10;              ///< volume fractions visited, both endpoints included
    int stage_iterations = 30;    ///< inner iteration cap per stage
    int max_outer_iterations = 1000;
    double change_tol = 0.01;     ///< stop when max |dt| falls below this at the final stage
    double move_limit = 0.2;
    /// Per-element move limit is multiplied by move_shrink when the element's
    /// step reverses direction and by move_grow (capped at move_limit) when the
    /// step keeps direction. Both 1 keep the move limit fixed.
    double move_shrink = 0.5;
    double move_grow = 1.2;
    double t_floor = 1e-3;
    SolverOptions solver;
};

void validate(const OptConfig& cfg);

/// Volume fraction of each continuation stage: linear from t1_start to t1_target.
std::vector<double> continuation_schedule(const OptConfig& cfg);

struct IterationRecord {
    int iteration = 0;
    double objective = 0.0;          ///< 1/2 U^T K(t) U at the iterate
    double external_work = 0.0;      ///< 1/2 f . U at the iterate
    double volume_fraction = 0.0;    ///< of the iterate the objective was evaluated on
    double max_change = 0.0;         ///< max |t_next - t| of the update that followed
    std::optional<double> duality_gap;  ///< objective - J*(U); only at p = 1
};

struct OptRun {
    std::vector<IterationRecord> history;
    DensityField final_field;
    EquilibriumSolution final_solution;
    bool converged = false;
};

/// Thrown when a solve or subproblem fails mid-run; keeps the trace so far.
class RunAborted : public std::runtime_error {
public:
    RunAborted(const std::string& what, OptRun partial, bool solver_failure)
        : std::runtime_error(what), partial_(std::move(partial)), solver_failure_(solver_failure) {}

    const OptRun& partial() const noexcept { return partial_; }
    bool solver_failure() const noexcept { return solver_failure_; }

private:
    OptRun partial_;
    bool solver_failure_;
};

/// dJ/dt_e = -1/2 E'(t_e) u_e^T ke u_e for active elements, 0 for inactive.
std::vector<double> sensitivities(const GridMesh& mesh, const DofMap& dofmap, const MaterialModel& mat,
                                  const DensityField& field, const Eigen::VectorXd& U);

/**
 * Exact minimizer of sum(g_e t_e) subject to sum(V_e t_e) = target_volume and
 * lower <= t <= upper (a continuous knapsack).
 *
 * Elements are filled to their upper bound in ascending g_e / V_e order, ties
 * by ascending index, so at most one element ends strictly inside its box.
 * Elements with V_e = 0 stay at their lower bound. Throws Infeasible when the
 * bounds cannot meet the target.
 */
std::vector<double> knapsack_minimize(std::span<const double> g, std::span<const double> V,
                                      std::span<const double> lower, std::span<const double> upper,
                                      double target_volume);

/// Linearized density update with box [max(floor, t - move), min(1, t + move)]
/// around t_prev and volume fraction t1.
DensityField knapsack_update(std::span<const double> g, const DensityField& t_prev, double t1, double move_limit);

/// Same with a per-element move limit.
DensityField knapsack_update(std::span<const double> g, const DensityField& t_prev, double t1,
                             std::span<const double> move_limits);

/// J*(U) = min over t in B of [-G(U, t)] + f . U, with B the full box
/// [t_floor, 1] under volume fraction t1. Requires p = 1 (G affine in t);
/// throws ModeError otherwise.
double dual_bound(const GridMesh& mesh, const DofMap& dofmap, const MaterialModel& mat, const BoundaryConditions& bc,
                  const Eigen::VectorXd& U, double t1, double t_floor = 1e-3);

/// Alternates equilibrium solves and exact linearized density updates while
/// stepping the volume fraction down the continuation schedule.
OptRun run_dual_lp(const GridMesh& mesh, const BoundaryConditions& bc, const MaterialModel& mat, const OptConfig& cfg);

}  // namespace topopt
