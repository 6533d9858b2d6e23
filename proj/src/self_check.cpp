#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "topopt/bench_cases.hpp"
#include "topopt/cli.hpp"
#include "topopt/fem_core.hpp"
#include "topopt/opt_dual_lp.hpp"
#include "topopt/opt_oc_filter.hpp"

namespace topopt {

namespace {

double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

bool patch_test() {
    const GridMesh mesh = build_grid(4, 3, 2.0, 1.5);
    const MaterialModel mat = make_material(1.0, 1e-6, 0.33, 1.0, Interpolation::linear);
    const double sigma = 1.0, hy = mesh.hy();
    std::vector<int> fixed;
    for (int iy = 0; iy <= mesh.nely; ++iy) fixed.push_back(2 * mesh.node(0, iy));
    fixed.push_back(2 * mesh.node(0, 0) + 1);
    std::vector<std::pair<int, double>> loads;
    for (int iy = 0; iy <= mesh.nely; ++iy) {
        const double share = (iy == 0 || iy == mesh.nely) ? 0.5 : 1.0;
        loads.emplace_back(2 * mesh.node(mesh.nelx, iy), sigma * hy * share);
    }
    const auto bc = make_boundary_conditions(mesh, fixed, loads);
    const std::vector<double> t(static_cast<std::size_t>(mesh.num_elements()), 1.0);
    const auto sol = equilibrium(mesh, build_dofmap(mesh), mat, t, bc);
    double err = 0.0, scale = 0.0;
    for (int n = 0; n < mesh.num_nodes(); ++n) {
        const auto [x, y] = mesh.node_position(n);
        const double u = sigma * x, v = -mat.nu * sigma * y;
        err = std::max({err, std::abs(sol.U[2 * n] - u), std::abs(sol.U[2 * n + 1] - v)});
        scale = std::max({scale, std::abs(u), std::abs(v)});
    }
    return err <= 1e-9 * scale;
}

bool rigid_body_modes() {
    const Matrix8d ke = reference_ke(0.7, 0.3, 0.33).ke;
    const std::array<double, 4> x = {0.0, 0.7, 0.7, 0.0}, y = {0.0, 0.0, 0.3, 0.3};
    Vector8d tx, ty, rot;
    for (int a = 0; a < 4; ++a) {
        tx.segment<2>(2 * a) << 1.0, 0.0;
        ty.segment<2>(2 * a) << 0.0, 1.0;
        rot.segment<2>(2 * a) << -y[a], x[a];
    }
    const double scale = ke.norm();
    return (ke * tx).norm() <= 1e-12 * scale && (ke * ty).norm() <= 1e-12 * scale &&
           (ke * rot).norm() <= 1e-12 * scale;
}

bool compliance_identity(std::mt19937_64& rng) {
    const CaseInstance inst = instantiate(with_mesh(find_case("cantilever"), 12, 10));
    const MaterialModel mat{};
    std::uniform_real_distribution<double> dist(1e-3, 1.0);
    std::vector<double> t(inst.seed.t.size());
    for (double& v : t) v = dist(rng);
    const auto sol = equilibrium(inst.mesh, build_dofmap(inst.mesh), mat, t, inst.bc);
    double sum = 0.0;
    for (double w : sol.element_energy) {
        if (w < 0.0) return false;
        sum += w;
    }
    return rel_diff(sol.compliance, sol.external_work) <= 1e-8 && rel_diff(sum, sol.compliance) <= 1e-8;
}

// Optimality certificate: some threshold ratio separates elements at their
// upper bounds (below) from those at their lower bounds (above).
bool knapsack_certificate(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(u01(rng) * 12);
        std::vector<double> g(n), V(n), lo(n), hi(n);
        double vmin = 0.0, vmax = 0.0;
        for (int e = 0; e < n; ++e) {
            g[e] = -u01(rng);
            V[e] = 0.5 + u01(rng);
            lo[e] = 0.3 * u01(rng);
            hi[e] = lo[e] + 0.7 * u01(rng);
            vmin += V[e] * lo[e];
            vmax += V[e] * hi[e];
        }
        const double target = vmin + u01(rng) * (vmax - vmin);
        const std::vector<double> t = knapsack_minimize(g, V, lo, hi, target);
        double vol = 0.0;
        double worst_upper = -INFINITY, best_lower = INFINITY;
        for (int e = 0; e < n; ++e) {
            vol += V[e] * t[e];
            const double r = g[e] / V[e];
            if (t[e] > lo[e]) worst_upper = std::max(worst_upper, r);
            if (t[e] < hi[e]) best_lower = std::min(best_lower, r);
        }
        if (rel_diff(vol, target) > 1e-10 || worst_upper > best_lower + 1e-14) return false;
    }
    return true;
}

bool sensitivity_fd(double p) {
    const CaseInstance inst = instantiate(with_mesh(find_case("cantilever"), 4, 3), 0.5);
    const MaterialModel mat = make_material(1.0, 1e-3, 0.3, p, p == 1.0 ? Interpolation::linear : Interpolation::simp);
    const DofMap dm = build_dofmap(inst.mesh);
    DensityField field = inst.seed;
    for (std::size_t e = 0; e < field.t.size(); ++e) field.t[e] = 0.3 + 0.05 * static_cast<double>(e % 7);
    const auto sol = equilibrium(inst.mesh, dm, mat, field.t, inst.bc);
    const std::vector<double> g = sensitivities(inst.mesh, dm, mat, field, sol.U);
    const double h = 1e-5;
    for (std::size_t e : {0u, 5u, 11u}) {
        DensityField plus = field, minus = field;
        plus.t[e] += h;
        minus.t[e] -= h;
        const double jp = equilibrium(inst.mesh, dm, mat, plus.t, inst.bc).compliance;
        const double jm = equilibrium(inst.mesh, dm, mat, minus.t, inst.bc).compliance;
        if (rel_diff((jp - jm) / (2 * h), g[e]) > 1e-4) return false;
    }
    return true;
}

bool filter_identity(std::mt19937_64& rng) {
    const GridMesh mesh = build_grid(6, 5, 1.0, 1.0);
    DensityField field = make_density_field(mesh, 0.5);
    std::uniform_real_distribution<double> dist(-1.0, 0.0);
    std::vector<double> g(field.size());
    for (double& v : g) v = dist(rng);
    return filter_sensitivities(mesh, field, g, FilterSpec{0.9}) == g;
}

bool oc_volume(std::mt19937_64& rng) {
    const GridMesh mesh = build_grid(7, 4, 1.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        DensityField field = make_density_field(mesh, 0.5);
        std::vector<double> g(field.size());
        for (double& v : g) v = -u01(rng) - 1e-3;
        const DensityField next = oc_update(field, g, 0.5);
        if (rel_diff(next.material_volume(), 0.5 * next.active_volume()) > 1e-6) return false;
    }
    return true;
}

bool weak_duality() {
    const CaseInstance inst = instantiate(with_mesh(find_case("cantilever"), 8, 5));
    const MaterialModel mat = make_material(210e9, 210e3, 0.33, 1.0, Interpolation::linear);
    OptConfig cfg;
    cfg.stages = 3;
    cfg.stage_iterations = 5;
    const OptRun run = run_dual_lp(inst.mesh, inst.bc, mat, cfg);
    for (const IterationRecord& r : run.history)
        if (!r.duality_gap || *r.duality_gap < -1e-9 * std::abs(r.objective)) return false;
    return !run.history.empty();
}

}  // namespace

int run_self_check(std::uint64_t seed, std::ostream& out) {
    std::mt19937_64 rng(seed);
    const std::vector<std::pair<std::string, std::function<bool()>>> checks = {
        {"patch test", patch_test},
        {"element rigid-body modes", rigid_body_modes},
        {"compliance identity and energy partition", [&] { return compliance_identity(rng); }},
        {"knapsack optimality certificate", [&] { return knapsack_certificate(rng); }},
        {"sensitivity finite differences p=1", [] { return sensitivity_fd(1.0); }},
        {"sensitivity finite differences p=3", [] { return sensitivity_fd(3.0); }},
        {"filter identity for rmin < 1", [&] { return filter_identity(rng); }},
        {"OC volume equality", [&] { return oc_volume(rng); }},
        {"weak duality at p=1", weak_duality},
    };
    int failures = 0;
    for (const auto& [name, check] : checks) {
        bool ok = false;
        try {
            ok = check();
        } catch (const std::exception& e) {
            out << "  (" << e.what() << ")\n";
        }
        out << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
        if (!ok) ++failures;
    }
    return failures;
}

}  // namespace topopt
