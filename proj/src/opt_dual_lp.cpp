#include "topopt/opt_dual_lp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "topopt/errors.hpp"

namespace topopt {

namespace {

bool is_affine(const MaterialModel& mat) { return mat.mode == Interpolation::linear || mat.p == 1.0; }

}  // namespace

void validate(const OptConfig& cfg) {
    if (!(cfg.t1_target > 0.0 && cfg.t1_target <= cfg.t1_start && cfg.t1_start <= 1.0))
        throw InvalidArgument("optimizer: require 0 < t1_target <= t1_start <= 1");
    if (cfg.stages < 1) throw InvalidArgument("optimizer: stages must be >= 1");
    if (cfg.stage_iterations < 1) throw InvalidArgument("optimizer: stage_iterations must be >= 1");
    if (cfg.max_outer_iterations < 0) throw InvalidArgument("optimizer: max_outer_iterations must be >= 0");
    if (!(cfg.change_tol > 0.0)) throw InvalidArgument("optimizer: change_tol must be positive");
    if (!(cfg.move_limit > 0.0 && cfg.move_limit <= 1.0)) throw InvalidArgument("optimizer: require 0 < move_limit <= 1");
    if (!(cfg.move_shrink > 0.0 && cfg.move_shrink <= 1.0)) throw InvalidArgument("optimizer: require 0 < move_shrink <= 1");
    if (!(cfg.move_grow >= 1.0)) throw InvalidArgument("optimizer: require move_grow >= 1");
    if (!(cfg.t_floor > 0.0 && cfg.t_floor < cfg.t1_target)) throw InvalidArgument("optimizer: require 0 < t_floor < t1_target");
}

std::vector<double> continuation_schedule(const OptConfig& cfg) {
    if (cfg.t1_start == cfg.t1_target || cfg.stages == 1) return {cfg.t1_target};
    std::vector<double> fractions(static_cast<std::size_t>(cfg.stages));
    const double step = (cfg.t1_target - cfg.t1_start) / (cfg.stages - 1);
    for (int s = 0; s < cfg.stages; ++s) fractions[static_cast<std::size_t>(s)] = cfg.t1_start + s * step;
    fractions.back() = cfg.t1_target;
    return fractions;
}

std::vector<double> sensitivities(const GridMesh& mesh, const DofMap& dofmap, const MaterialModel& mat,
                                  const DensityField& field, const Eigen::VectorXd& U) {
    if (field.size() != static_cast<std::size_t>(mesh.num_elements()))
        throw InvalidArgument("sensitivities: density field length does not match mesh");
    if (U.size() != mesh.num_dofs()) throw InvalidArgument("sensitivities: displacement length does not match mesh");
    std::vector<double> g = unit_energies(mesh, dofmap, mat.nu, U);
    for (std::size_t e = 0; e < g.size(); ++e)
        g[e] = field.is_active(e) ? -interpolate_dE(mat, field.t[e]) * g[e] : 0.0;
    return g;
}

std::vector<double> knapsack_minimize(std::span<const double> g, std::span<const double> V,
                                      std::span<const double> lower, std::span<const double> upper,
                                      double target_volume) {
    const std::size_t n = g.size();
    if (V.size() != n || lower.size() != n || upper.size() != n)
        throw InvalidArgument("knapsack: length mismatch");

    double vmin = 0.0, vmax = 0.0;
    for (std::size_t e = 0; e < n; ++e) {
        if (lower[e] > upper[e]) throw InvalidArgument("knapsack: lower bound above upper bound at " + std::to_string(e));
        if (V[e] < 0.0) throw InvalidArgument("knapsack: negative element volume");
        vmin += V[e] * lower[e];
        vmax += V[e] * upper[e];
    }
    const double slack = 1e-12 * std::max(std::abs(target_volume), vmax);
    if (vmin > target_volume + slack)
        throw Infeasible("knapsack: lower bounds exceed the target volume", Infeasible::Side::lower);
    if (vmax < target_volume - slack)
        throw Infeasible("knapsack: upper bounds cannot reach the target volume", Infeasible::Side::upper);

    std::vector<double> t(lower.begin(), lower.end());
    std::vector<std::size_t> order;
    order.reserve(n);
    for (std::size_t e = 0; e < n; ++e)
        if (V[e] > 0.0 && upper[e] > lower[e]) order.push_back(e);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return g[a] / V[a] < g[b] / V[b]; });

    double remaining = target_volume - vmin;
    for (std::size_t e : order) {
        if (remaining <= 0.0) break;
        const double capacity = V[e] * (upper[e] - lower[e]);
        if (capacity <= remaining) {
            t[e] = upper[e];
            remaining -= capacity;
        } else {
            t[e] = std::min(upper[e], lower[e] + remaining / V[e]);
            remaining = 0.0;
        }
    }
    return t;
}

DensityField knapsack_update(std::span<const double> g, const DensityField& t_prev, double t1,
                             std::span<const double> move_limits) {
    const std::size_t n = t_prev.size();
    if (g.size() != n || move_limits.size() != n) throw InvalidArgument("knapsack_update: length mismatch");
    if (!(t1 > 0.0 && t1 <= 1.0)) throw InvalidArgument("knapsack_update: volume fraction must lie in (0, 1]");
    std::vector<double> lower(n), upper(n);
    for (std::size_t e = 0; e < n; ++e) {
        if (!t_prev.is_active(e)) {
            lower[e] = upper[e] = t_prev.t_floor;
            continue;
        }
        lower[e] = std::max(t_prev.t_floor, t_prev.t[e] - move_limits[e]);
        upper[e] = std::min(1.0, t_prev.t[e] + move_limits[e]);
    }
    DensityField next = t_prev;
    next.target_fraction = t1;
    next.t = knapsack_minimize(g, t_prev.volume, lower, upper, t1 * t_prev.active_volume());
    return next;
}

DensityField knapsack_update(std::span<const double> g, const DensityField& t_prev, double t1, double move_limit) {
    if (!(move_limit > 0.0)) throw InvalidArgument("knapsack_update: move limit must be positive");
    const std::vector<double> moves(t_prev.size(), move_limit);
    return knapsack_update(g, t_prev, t1, moves);
}

double dual_bound(const GridMesh& mesh, const DofMap& dofmap, const MaterialModel& mat, const BoundaryConditions& bc,
                  const Eigen::VectorXd& U, double t1, double t_floor) {
    if (!is_affine(mat)) throw ModeError("dual_bound: only valid for linear interpolation (p = 1)");
    const std::vector<double> q = unit_energies(mesh, dofmap, mat.nu, U);
    const DensityField box = make_density_field(mesh, 1.0, t_floor);

    double work = 0.0;
    for (const auto& [d, value] : bc.loads) work += value * U[d];

    // G(U, t) = sum_e (E1 + t_e (E0 - E1)) q_e on active elements, E1 q_e elsewhere.
    double constant = work;
    std::vector<double> coeff(q.size(), 0.0), lower(q.size(), t_floor), upper(q.size(), t_floor);
    for (std::size_t e = 0; e < q.size(); ++e) {
        constant -= mat.E1 * q[e];
        if (box.is_active(e)) {
            coeff[e] = -(mat.E0 - mat.E1) * q[e];
            upper[e] = 1.0;
        }
    }
    const std::vector<double> t = knapsack_minimize(coeff, box.volume, lower, upper, t1 * box.active_volume());
    double linear = 0.0;
    for (std::size_t e = 0; e < t.size(); ++e) linear += coeff[e] * t[e];
    return constant + linear;
}

namespace {

// A stage change larger than the move window leaves the box unable to reach
// the new volume; widen every window until it can.
DensityField widened_update(std::span<const double> g, const DensityField& field, double fraction,
                            std::vector<double>& moves) {
    for (;;) {
        try {
            return knapsack_update(g, field, fraction, moves);
        } catch (const Infeasible&) {
            if (std::all_of(moves.begin(), moves.end(), [](double m) { return m >= 1.0; })) throw;
            for (double& m : moves) m = std::min(1.0, 2.0 * m);
        }
    }
}

}  // namespace

OptRun run_dual_lp(const GridMesh& mesh, const BoundaryConditions& bc, const MaterialModel& mat, const OptConfig& cfg) {
    validate(cfg);
    validate(mat);
    const DofMap dofmap = build_dofmap(mesh);
    const bool track_gap = is_affine(mat);
    const std::size_t n = static_cast<std::size_t>(mesh.num_elements());

    OptRun run;
    DensityField field = make_density_field(mesh, cfg.t1_start, cfg.t_floor);
    int iteration = 0;

    try {
        for (double fraction : continuation_schedule(cfg)) {
            const bool final_stage = fraction == cfg.t1_target;
            std::vector<double> moves(n, cfg.move_limit);
            std::vector<double> last_step(n, 0.0);
            bool stage_converged = false;

            for (int k = 0; k < cfg.stage_iterations && iteration < cfg.max_outer_iterations; ++k) {
                const EquilibriumSolution sol = solve(assemble(mesh, dofmap, mat, field.t, bc), cfg.solver);

                IterationRecord rec;
                rec.iteration = ++iteration;
                rec.objective = sol.compliance;
                rec.external_work = sol.external_work;
                rec.volume_fraction = field.volume_fraction();
                if (track_gap)
                    rec.duality_gap =
                        sol.compliance - dual_bound(mesh, dofmap, mat, bc, sol.U, rec.volume_fraction, cfg.t_floor);

                const std::vector<double> g = sensitivities(mesh, dofmap, mat, field, sol.U);
                DensityField next = widened_update(g, field, fraction, moves);
                rec.max_change = max_change(next.t, field.t);

                for (std::size_t e = 0; e < n; ++e) {
                    const double step = next.t[e] - field.t[e];
                    if (step * last_step[e] < 0.0)
                        moves[e] *= cfg.move_shrink;
                    else if (step * last_step[e] > 0.0)
                        moves[e] = std::min(cfg.move_limit, moves[e] * cfg.move_grow);
                    if (step != 0.0) last_step[e] = step;
                }

                run.history.push_back(rec);
                field = std::move(next);
                if (rec.max_change < cfg.change_tol) {
                    stage_converged = true;
                    break;
                }
            }
            if (final_stage) run.converged = stage_converged;
            if (iteration >= cfg.max_outer_iterations) break;
        }
        run.final_field = field;
        run.final_solution = equilibrium(mesh, dofmap, mat, field.t, bc, cfg.solver);
    } catch (const SolverFailure& err) {
        run.final_field = field;
        throw RunAborted(err.what(), std::move(run), true);
    } catch (const Infeasible& err) {
        run.final_field = field;
        throw RunAborted(err.what(), std::move(run), false);
    }
    return run;
}

}  // namespace topopt
