#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "topopt/material.hpp"
#include "topopt/mesh_bc.hpp"

namespace topopt {

using Matrix8d = Eigen::Matrix<double, 8, 8>;
using Vector8d = Eigen::Matrix<double, 8, 1>;

/// Bilinear quad stiffness at unit Young's modulus and unit thickness.
/// DOF order matches element_dofs.
struct ElementStiffness {
    Matrix8d ke;
};

ElementStiffness reference_ke(double hx, double hy, double nu);

/// Reduced system after symmetric elimination of the fixed DOFs.
struct SparseSystem {
    Eigen::SparseMatrix<double, Eigen::RowMajor> K;  ///< free x free
    Eigen::VectorXd rhs;                             ///< loads on free DOFs
    std::vector<int> free_dofs;                      ///< reduced index -> global DOF
    std::vector<int> reduced_index;                  ///< global DOF -> reduced index, -1 if fixed
    Eigen::VectorXd loads;                           ///< full load vector
};

enum class LinearSolver { direct, cg };

struct SolverOptions {
    LinearSolver kind = LinearSolver::direct;
    double rel_tol = 1e-9;
    int max_iter_factor = 10;  ///< CG iteration cap = factor * free DOFs
};

struct EquilibriumSolution {
    Eigen::VectorXd U;                  ///< full displacement vector, zero at fixed DOFs
    double compliance = 0.0;            ///< 1/2 U^T K U
    double external_work = 0.0;         ///< 1/2 f . U
    double residual = 0.0;              ///< ||K U - f|| / ||f|| on the free DOFs
    std::vector<double> element_energy; ///< filled by equilibrium()
};

/// Young's modulus actually used for element e: E(t_e) if active, E1 otherwise.
double element_modulus(const GridMesh& mesh, const MaterialModel& mat, std::span<const double> t, int e);

SparseSystem assemble(const GridMesh& mesh, const DofMap& dofmap, const MaterialModel& mat,
                      std::span<const double> t, const BoundaryConditions& bc);

/// Assembles with an explicit element visiting order (a permutation of all elements).
SparseSystem assemble(const GridMesh& mesh, const DofMap& dofmap, const MaterialModel& mat,
                      std::span<const double> t, const BoundaryConditions& bc, std::span<const int> order);

/// Solves K U = f. Throws SolverFailure when the residual exceeds rel_tol * ||f||.
EquilibriumSolution solve(const SparseSystem& sys, const SolverOptions& opts = {});

/// w_e = 1/2 E_e u_e^T ke u_e.
std::vector<double> element_energies(const GridMesh& mesh, const DofMap& dofmap, const MaterialModel& mat,
                                      std::span<const double> t, const Eigen::VectorXd& U);

/// u_e^T ke u_e / 2 at unit modulus, per element.
std::vector<double> unit_energies(const GridMesh& mesh, const DofMap& dofmap, double nu, const Eigen::VectorXd& U);

/// assemble + solve + element_energies.
EquilibriumSolution equilibrium(const GridMesh& mesh, const DofMap& dofmap, const MaterialModel& mat,
                                std::span<const double> t, const BoundaryConditions& bc,
                                const SolverOptions& opts = {});

}  // namespace topopt
