#include "topopt/opt_oc_filter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "topopt/errors.hpp"

namespace topopt {

namespace {

constexpr double kLambdaLow = 1e-12;
constexpr double kLambdaHigh = 1e12;
constexpr int kMaxHalvings = 200;
constexpr double kVolumeTol = 1e-6;

double material_volume(const DensityField& ref, std::span<const double> t) {
    double v = 0.0;
    for (std::size_t e = 0; e < t.size(); ++e) v += t[e] * ref.volume[e];
    return v;
}

}  // namespace

std::vector<double> oc_step(const DensityField& t_prev, std::span<const double> g, double lambda, double move,
                            double eta) {
    std::vector<double> t(t_prev.size());
    for (std::size_t e = 0; e < t.size(); ++e) {
        if (!t_prev.is_active(e)) {
            t[e] = t_prev.t_floor;
            continue;
        }
        const double lo = std::max(t_prev.t_floor, t_prev.t[e] - move);
        const double hi = std::min(1.0, t_prev.t[e] + move);
        const double trial = t_prev.t[e] * std::pow(-g[e] / lambda, eta);
        t[e] = std::clamp(trial, lo, hi);
    }
    return t;
}

void validate(const OcConfig& cfg, const GridMesh& mesh) {
    if (!(cfg.t1 > 0.0 && cfg.t1 <= 1.0)) throw InvalidArgument("oc: require 0 < t1 <= 1");
    if (!(cfg.filter.rmin >= 0.0 && cfg.filter.rmin < std::max(mesh.nelx, mesh.nely)))
        throw InvalidArgument("oc: require 0 <= rmin < max(nelx, nely)");
    if (!(cfg.move > 0.0 && cfg.move <= 1.0)) throw InvalidArgument("oc: require 0 < move <= 1");
    if (!(cfg.eta > 0.0)) throw InvalidArgument("oc: eta must be positive");
    if (!(cfg.change_tol > 0.0)) throw InvalidArgument("oc: change_tol must be positive");
    if (cfg.max_iterations < 0) throw InvalidArgument("oc: max_iterations must be >= 0");
    if (!(cfg.t_floor > 0.0 && cfg.t_floor < cfg.t1)) throw InvalidArgument("oc: require 0 < t_floor < t1");
}

std::vector<double> filter_sensitivities(const GridMesh& mesh, const DensityField& field, std::span<const double> g,
                                         const FilterSpec& spec) {
    const auto n = static_cast<std::size_t>(mesh.num_elements());
    if (g.size() != n || field.size() != n) throw InvalidArgument("filter_sensitivities: length mismatch");
    if (spec.rmin < 1.0) return {g.begin(), g.end()};

    std::vector<double> out(n, 0.0);
    const int reach = static_cast<int>(std::floor(spec.rmin));
    for (int ex = 0; ex < mesh.nelx; ++ex) {
        for (int ey = 0; ey < mesh.nely; ++ey) {
            const int e = mesh.element(ex, ey);
            const auto ie = static_cast<std::size_t>(e);
            if (!mesh.is_active(e)) {
                out[ie] = g[ie];
                continue;
            }
            double weight_sum = 0.0;
            double acc = 0.0;
            for (int ix = std::max(0, ex - reach); ix <= std::min(mesh.nelx - 1, ex + reach); ++ix) {
                for (int iy = std::max(0, ey - reach); iy <= std::min(mesh.nely - 1, ey + reach); ++iy) {
                    const int i = mesh.element(ix, iy);
                    if (!mesh.is_active(i)) continue;
                    const double dist = std::hypot(ex - ix, ey - iy);
                    if (dist > spec.rmin) continue;
                    const double w = spec.rmin - dist;
                    const auto ii = static_cast<std::size_t>(i);
                    weight_sum += w;
                    acc += w * field.t[ii] * g[ii];
                }
            }
            out[ie] = acc / (field.t[ie] * weight_sum);
        }
    }
    return out;
}

DensityField oc_update(const DensityField& t_prev, std::span<const double> g_filtered, double t1, double move,
                       double eta) {
    if (g_filtered.size() != t_prev.size()) throw InvalidArgument("oc_update: length mismatch");
    for (std::size_t e = 0; e < g_filtered.size(); ++e)
        if (t_prev.is_active(e) && g_filtered[e] > 0.0)
            throw InvalidArgument("oc_update: positive sensitivity at element " + std::to_string(e));

    const double target = t1 * t_prev.active_volume();
    double lo = kLambdaLow, hi = kLambdaHigh;
    for (int k = 0; k < kMaxHalvings; ++k) {
        const double mid = std::sqrt(lo * hi);
        std::vector<double> t = oc_step(t_prev, g_filtered, mid, move, eta);
        const double vol = material_volume(t_prev, t);
        if (std::abs(vol - target) <= kVolumeTol * target) {
            DensityField next = t_prev;
            next.t = std::move(t);
            next.target_fraction = t1;
            return next;
        }
        if (vol > target)
            lo = mid;
        else
            hi = mid;
    }
    throw MultiplierNotFound("oc_update: volume multiplier not found in [1e-12, 1e12]");
}

OptRun run_oc(const GridMesh& mesh, const BoundaryConditions& bc, const MaterialModel& mat, const OcConfig& cfg) {
    validate(cfg, mesh);
    validate(mat);
    const DofMap dofmap = build_dofmap(mesh);

    OptRun run;
    DensityField field = make_density_field(mesh, cfg.t1, cfg.t_floor);
    try {
        for (int it = 1; it <= cfg.max_iterations; ++it) {
            const EquilibriumSolution sol = solve(assemble(mesh, dofmap, mat, field.t, bc), cfg.solver);
            IterationRecord rec;
            rec.iteration = it;
            rec.objective = sol.compliance;
            rec.external_work = sol.external_work;
            rec.volume_fraction = field.volume_fraction();

            const std::vector<double> g = sensitivities(mesh, dofmap, mat, field, sol.U);
            const std::vector<double> gf = filter_sensitivities(mesh, field, g, cfg.filter);
            DensityField next = oc_update(field, gf, cfg.t1, cfg.move, cfg.eta);
            rec.max_change = max_change(next.t, field.t);
            run.history.push_back(rec);
            field = std::move(next);
            if (rec.max_change < cfg.change_tol) {
                run.converged = true;
                break;
            }
        }
        run.final_field = field;
        run.final_solution = equilibrium(mesh, dofmap, mat, field.t, bc, cfg.solver);
    } catch (const SolverFailure& err) {
        run.final_field = field;
        throw RunAborted(err.what(), std::move(run), true);
    } catch (const MultiplierNotFound& err) {
        run.final_field = field;
        throw RunAborted(err.what(), std::move(run), false);
    }
    return run;
}

}  // namespace topopt
