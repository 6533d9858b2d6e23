#include "topopt/fem_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "topopt/errors.hpp"

namespace topopt {

namespace {

// Natural coordinates of the corners, counter-clockwise from bottom-left.
constexpr std::array<double, 4> kXi = {-1.0, 1.0, 1.0, -1.0};
constexpr std::array<double, 4> kEta = {-1.0, -1.0, 1.0, 1.0};

using ColMatrix = Eigen::SparseMatrix<double>;

void check_field(const GridMesh& mesh, std::span<const double> t) {
    if (t.size() != static_cast<std::size_t>(mesh.num_elements()))
        throw InvalidArgument("density field length " + std::to_string(t.size()) + " does not match element count " +
                              std::to_string(mesh.num_elements()));
}

double relative_residual(const ColMatrix& K, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
    const double bn = b.norm();
    const double rn = (K * x - b).norm();
    return bn > 0.0 ? rn / bn : rn;
}

}  // namespace

ElementStiffness reference_ke(double hx, double hy, double nu) {
    if (!(hx > 0.0) || !(hy > 0.0)) throw InvalidArgument("reference_ke: element sizes must be positive");
    const Eigen::Matrix3d H = plane_stress_matrix(1.0, nu);
    const double g = 1.0 / std::sqrt(3.0);
    const std::array<double, 2> gauss = {-g, g};
    const double detJ = 0.25 * hx * hy;

    ElementStiffness out;
    out.ke.setZero();
    for (double xi : gauss) {
        for (double eta : gauss) {
            Eigen::Matrix<double, 3, 8> B = Eigen::Matrix<double, 3, 8>::Zero();
            for (int a = 0; a < 4; ++a) {
                const double dNdx = 0.25 * kXi[a] * (1.0 + kEta[a] * eta) * (2.0 / hx);
                const double dNdy = 0.25 * kEta[a] * (1.0 + kXi[a] * xi) * (2.0 / hy);
                B(0, 2 * a) = dNdx;
                B(1, 2 * a + 1) = dNdy;
                B(2, 2 * a) = dNdy;      // engineering shear strain
                B(2, 2 * a + 1) = dNdx;
            }
            out.ke.noalias() += B.transpose() * H * B * detJ;  // unit weights
        }
    }
    out.ke = 0.5 * (out.ke + out.ke.transpose()).eval();
    return out;
}

double element_modulus(const GridMesh& mesh, const MaterialModel& mat, std::span<const double> t, int e) {
    return mesh.is_active(e) ? interpolate_E(mat, t[static_cast<std::size_t>(e)]) : mat.E1;
}

SparseSystem assemble(const GridMesh& mesh, const DofMap& dofmap, const MaterialModel& mat,
                      std::span<const double> t, const BoundaryConditions& bc) {
    std::vector<int> order(static_cast<std::size_t>(mesh.num_elements()));
    std::iota(order.begin(), order.end(), 0);
    return assemble(mesh, dofmap, mat, t, bc, order);
}

SparseSystem assemble(const GridMesh& mesh, const DofMap& dofmap, const MaterialModel& mat,
                      std::span<const double> t, const BoundaryConditions& bc, std::span<const int> order) {
    check_field(mesh, t);
    validate(bc, mesh);
    if (dofmap.elements.size() != static_cast<std::size_t>(mesh.num_elements()))
        throw InvalidArgument("assemble: DOF map does not match mesh");

    const int ndof = mesh.num_dofs();
    SparseSystem sys;
    sys.reduced_index.assign(static_cast<std::size_t>(ndof), 0);
    for (int d : bc.fixed_dofs) sys.reduced_index[static_cast<std::size_t>(d)] = -1;
    for (int d = 0; d < ndof; ++d) {
        if (sys.reduced_index[static_cast<std::size_t>(d)] < 0) continue;
        sys.reduced_index[static_cast<std::size_t>(d)] = static_cast<int>(sys.free_dofs.size());
        sys.free_dofs.push_back(d);
    }
    const int nfree = static_cast<int>(sys.free_dofs.size());

    const Matrix8d ke = reference_ke(mesh.hx(), mesh.hy(), mat.nu).ke;
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(order.size() * 64);
    for (int e : order) {
        const double E = element_modulus(mesh, mat, t, e);
        const auto& dofs = dofmap.elements[static_cast<std::size_t>(e)];
        for (int i = 0; i < 8; ++i) {
            const int ri = sys.reduced_index[static_cast<std::size_t>(dofs[i])];
            if (ri < 0) continue;
            for (int j = 0; j < 8; ++j) {
                const int rj = sys.reduced_index[static_cast<std::size_t>(dofs[j])];
                if (rj < 0) continue;
                triplets.emplace_back(ri, rj, E * ke(i, j));
            }
        }
    }
    sys.K.resize(nfree, nfree);
    sys.K.setFromTriplets(triplets.begin(), triplets.end());

    sys.loads = Eigen::VectorXd::Zero(ndof);
    for (const auto& [d, value] : bc.loads) sys.loads[d] += value;
    sys.rhs.resize(nfree);
    for (int r = 0; r < nfree; ++r) sys.rhs[r] = sys.loads[sys.free_dofs[static_cast<std::size_t>(r)]];
    return sys;
}

EquilibriumSolution solve(const SparseSystem& sys, const SolverOptions& opts) {
    const Eigen::Index n = sys.K.rows();
    const ColMatrix K = sys.K;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    double residual = 0.0;

    if (sys.rhs.norm() > 0.0) {
        if (opts.kind == LinearSolver::direct) {
            Eigen::SimplicialLLT<ColMatrix> llt(K);
            if (llt.info() != Eigen::Success)
                throw SolverFailure("solve: Cholesky factorization failed (matrix not SPD)",
                                    std::numeric_limits<double>::infinity());
            x = llt.solve(sys.rhs);
            residual = relative_residual(K, x, sys.rhs);
            // Iterative refinement against the stiffness contrast.
            for (int pass = 0; pass < 4 && residual > opts.rel_tol; ++pass) {
                x += llt.solve(sys.rhs - K * x);
                residual = relative_residual(K, x, sys.rhs);
            }
        } else {
            Eigen::ConjugateGradient<ColMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
            cg.setTolerance(opts.rel_tol);
            cg.setMaxIterations(static_cast<Eigen::Index>(opts.max_iter_factor) * std::max<Eigen::Index>(n, 1));
            cg.compute(K);
            x = cg.solve(sys.rhs);
            residual = relative_residual(K, x, sys.rhs);
        }
        if (!std::isfinite(residual) || residual > opts.rel_tol)
            throw SolverFailure("solve: residual " + std::to_string(residual) + " above tolerance", residual);
    }

    EquilibriumSolution sol;
    sol.U = Eigen::VectorXd::Zero(sys.loads.size());
    for (Eigen::Index r = 0; r < n; ++r) sol.U[sys.free_dofs[static_cast<std::size_t>(r)]] = x[r];
    sol.compliance = 0.5 * x.dot(K * x);
    sol.external_work = 0.5 * sys.loads.dot(sol.U);
    sol.residual = residual;
    return sol;
}

std::vector<double> unit_energies(const GridMesh& mesh, const DofMap& dofmap, double nu, const Eigen::VectorXd& U) {
    if (U.size() != mesh.num_dofs()) throw InvalidArgument("displacement vector length does not match mesh");
    const Matrix8d ke = reference_ke(mesh.hx(), mesh.hy(), nu).ke;
    std::vector<double> q(static_cast<std::size_t>(mesh.num_elements()));
    for (int e = 0; e < mesh.num_elements(); ++e) {
        Vector8d ue;
        const auto& dofs = dofmap.elements[static_cast<std::size_t>(e)];
        for (int i = 0; i < 8; ++i) ue[i] = U[dofs[i]];
        q[static_cast<std::size_t>(e)] = std::max(0.0, 0.5 * ue.dot(ke * ue));
    }
    return q;
}

std::vector<double> element_energies(const GridMesh& mesh, const DofMap& dofmap, const MaterialModel& mat,
                                     std::span<const double> t, const Eigen::VectorXd& U) {
    check_field(mesh, t);
    std::vector<double> w = unit_energies(mesh, dofmap, mat.nu, U);
    for (int e = 0; e < mesh.num_elements(); ++e) w[static_cast<std::size_t>(e)] *= element_modulus(mesh, mat, t, e);
    return w;
}

EquilibriumSolution equilibrium(const GridMesh& mesh, const DofMap& dofmap, const MaterialModel& mat,
                                std::span<const double> t, const BoundaryConditions& bc, const SolverOptions& opts) {
    EquilibriumSolution sol = solve(assemble(mesh, dofmap, mat, t, bc), opts);
    sol.element_energy = element_energies(mesh, dofmap, mat, t, sol.U);
    return sol;
}

}  // namespace topopt
