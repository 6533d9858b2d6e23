#include <doctest.h>

#include <limits>
#include <random>

#include "test_support.hpp"
#include "topopt/bench_cases.hpp"
#include "topopt/errors.hpp"
#include "topopt/opt_dual_lp.hpp"

using namespace topopt;
using topopt::test::rel_diff;

namespace {

// Vertex enumeration: an LP over a box cut by one equality has an optimal
// vertex with all coordinates at a bound except at most one.
double lp_oracle(const std::vector<double>& g, const std::vector<double>& V, const std::vector<double>& lo,
                 const std::vector<double>& hi, double target) {
    const int n = static_cast<int>(g.size());
    double best = std::numeric_limits<double>::infinity();
    for (int free = -1; free < n; ++free) {
        const int bits = free < 0 ? n : n - 1;
        for (long mask = 0; mask < (1L << bits); ++mask) {
            std::vector<double> t(n);
            double vol = 0.0;
            int bit = 0;
            for (int e = 0; e < n; ++e) {
                if (e == free) continue;
                t[e] = (mask >> bit++) & 1 ? hi[e] : lo[e];
                vol += V[e] * t[e];
            }
            if (free >= 0) {
                t[free] = (target - vol) / V[free];
                if (t[free] < lo[free] - 1e-12 || t[free] > hi[free] + 1e-12) continue;
            } else if (std::abs(vol - target) > 1e-12 * std::max(1.0, target)) {
                continue;
            }
            double obj = 0.0;
            for (int e = 0; e < n; ++e) obj += g[e] * t[e];
            best = std::min(best, obj);
        }
    }
    return best;
}

MaterialModel unit_material(double p) {
    return make_material(1.0, 1e-3, 0.3, p, p == 1.0 ? Interpolation::linear : Interpolation::simp);
}

}  // namespace

TEST_CASE("knapsack_minimize examples") {
    const std::vector<double> g{-5, -1, -3, 0}, V(4, 1.0), lo(4, 0.0), hi(4, 1.0);
    CHECK(knapsack_minimize(g, V, lo, hi, 2.0) == std::vector<double>{1, 0, 1, 0});
    CHECK(knapsack_minimize(g, V, lo, hi, 1.5) == std::vector<double>{1, 0, 0.5, 0});

    const std::vector<double> zero(4, 0.0);
    CHECK(knapsack_minimize(zero, V, lo, hi, 2.0) == std::vector<double>{1, 1, 0, 0});
    CHECK(knapsack_minimize(zero, V, lo, hi, 2.5) == std::vector<double>{1, 1, 0.5, 0});
}

TEST_CASE("knapsack_minimize infeasibility names the side") {
    const std::vector<double> g{-1, -2}, V{1, 1}, lo{0.4, 0.4}, hi{0.6, 0.6};
    try {
        knapsack_minimize(g, V, lo, hi, 0.5);
        FAIL("expected Infeasible");
    } catch (const Infeasible& e) {
        CHECK(e.side() == Infeasible::Side::lower);
    }
    try {
        knapsack_minimize(g, V, lo, hi, 1.5);
        FAIL("expected Infeasible");
    } catch (const Infeasible& e) {
        CHECK(e.side() == Infeasible::Side::upper);
    }
}

TEST_CASE("knapsack_minimize agrees with the LP oracle on random instances") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<int> size(1, 12);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = size(rng);
        std::vector<double> g(n), V(n), lo(n), hi(n);
        double vmin = 0.0, vmax = 0.0;
        for (int e = 0; e < n; ++e) {
            g[e] = 2.0 * u01(rng) - 1.5;
            V[e] = 0.1 + u01(rng);
            lo[e] = 0.5 * u01(rng);
            hi[e] = lo[e] + u01(rng) * (1.0 - lo[e]);
            vmin += V[e] * lo[e];
            vmax += V[e] * hi[e];
        }
        const double target = vmin + u01(rng) * (vmax - vmin);
        const std::vector<double> t = knapsack_minimize(g, V, lo, hi, target);

        double obj = 0.0, vol = 0.0;
        int interior = 0;
        for (int e = 0; e < n; ++e) {
            obj += g[e] * t[e];
            vol += V[e] * t[e];
            CHECK(t[e] >= lo[e]);
            CHECK(t[e] <= hi[e]);
            if (t[e] > lo[e] && t[e] < hi[e]) ++interior;
        }
        CHECK(interior <= 1);
        CHECK(std::abs(vol - target) <= 1e-12 * std::max(1.0, target));
        CHECK(std::abs(obj - lp_oracle(g, V, lo, hi, target)) <= 1e-10);
    }
}

TEST_CASE("knapsack_update respects move limits and volume") {
    const GridMesh mesh = build_grid(2, 2, 1.0, 1.0);
    DensityField field = make_density_field(mesh, 0.5);
    const std::vector<double> g{-4, -3, -2, -1};
    const DensityField next = knapsack_update(g, field, 0.5, 0.2);
    const std::vector<double> expected{0.7, 0.7, 0.3, 0.3};
    for (std::size_t e = 0; e < 4; ++e) CHECK(next.t[e] == doctest::Approx(expected[e]).epsilon(1e-14));
    CHECK(rel_diff(next.volume_fraction(), 0.5) < 1e-12);

    const DensityField lower = knapsack_update(g, field, 0.4, 0.2);
    CHECK(rel_diff(lower.volume_fraction(), 0.4) < 1e-12);
    CHECK_THROWS_AS(knapsack_update(g, field, 0.2, 0.2), Infeasible);
}

TEST_CASE("sensitivities") {
    const CaseInstance inst = instantiate(with_mesh(find_case("cantilever"), 4, 3), 0.5);
    const DofMap dm = build_dofmap(inst.mesh);
    DensityField field = inst.seed;
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(0.2, 0.9);
    for (double& t : field.t) t = dist(rng);

    SUBCASE("zero displacement") {
        for (double g : sensitivities(inst.mesh, dm, unit_material(3.0), field, Eigen::VectorXd::Zero(inst.mesh.num_dofs())))
            CHECK(g == 0.0);
    }

    SUBCASE("match centered finite differences with full re-solves") {
        for (double p : {1.0, 3.0}) {
            const MaterialModel mat = unit_material(p);
            const EquilibriumSolution sol = equilibrium(inst.mesh, dm, mat, field.t, inst.bc);
            const std::vector<double> g = sensitivities(inst.mesh, dm, mat, field, sol.U);
            const double h = 1e-5;
            for (std::size_t e = 0; e < g.size(); ++e) {
                CAPTURE(p);
                CAPTURE(e);
                std::vector<double> plus = field.t, minus = field.t;
                plus[e] += h;
                minus[e] -= h;
                const double fd = (equilibrium(inst.mesh, dm, mat, plus, inst.bc).compliance -
                                   equilibrium(inst.mesh, dm, mat, minus, inst.bc).compliance) /
                                  (2 * h);
                CHECK(g[e] <= 0.0);
                CHECK(rel_diff(fd, g[e]) < 1e-4);
            }
        }
    }

    SUBCASE("p = 1 ratio to element energy is constant") {
        const MaterialModel mat = unit_material(1.0);
        const EquilibriumSolution sol = equilibrium(inst.mesh, dm, mat, field.t, inst.bc);
        const std::vector<double> g = sensitivities(inst.mesh, dm, mat, field, sol.U);
        const std::vector<double> q = unit_energies(inst.mesh, dm, mat.nu, sol.U);
        for (std::size_t e = 0; e < g.size(); ++e) CHECK(rel_diff(g[e] / q[e], -(mat.E0 - mat.E1)) < 1e-12);
    }

    SUBCASE("length mismatch") {
        DensityField wrong = field;
        wrong.t.pop_back();
        wrong.volume.pop_back();
        CHECK_THROWS_AS(sensitivities(inst.mesh, dm, unit_material(3.0), wrong, Eigen::VectorXd::Zero(inst.mesh.num_dofs())),
                        InvalidArgument);
    }
}

TEST_CASE("dual_bound") {
    const CaseInstance inst = instantiate(with_mesh(find_case("cantilever"), 3, 2), 0.5);
    const DofMap dm = build_dofmap(inst.mesh);
    const MaterialModel lin = unit_material(1.0);

    CHECK(dual_bound(inst.mesh, dm, lin, inst.bc, Eigen::VectorXd::Zero(inst.mesh.num_dofs()), 0.5) == 0.0);
    CHECK_THROWS_AS(dual_bound(inst.mesh, dm, unit_material(3.0), inst.bc, Eigen::VectorXd::Zero(inst.mesh.num_dofs()), 0.5),
                    ModeError);

    std::mt19937 rng(5);
    std::uniform_real_distribution<double> dist(0.05, 1.0);
    std::vector<double> t(6);
    for (double& v : t) v = dist(rng);
    const EquilibriumSolution sol = equilibrium(inst.mesh, dm, lin, t, inst.bc);

    // Oracle: J*(U) by vertex enumeration of min over t of J1(U, t), with J1
    // evaluated from element energies.
    const std::vector<double> q = unit_energies(inst.mesh, dm, lin.nu, sol.U);
    double work = 0.0;
    for (const auto& [d, f] : inst.bc.loads) work += f * sol.U[d];
    std::vector<double> coeff(6), V(6, inst.mesh.element_area()), lo(6, 1e-3), hi(6, 1.0);
    double constant = work;
    for (int e = 0; e < 6; ++e) {
        coeff[e] = -(lin.E0 - lin.E1) * q[e];
        constant -= lin.E1 * q[e];
    }
    const double oracle = constant + lp_oracle(coeff, V, lo, hi, 0.5 * 6 * inst.mesh.element_area());
    const double bound = dual_bound(inst.mesh, dm, lin, inst.bc, sol.U, 0.5);
    CHECK(rel_diff(bound, oracle) < 1e-12);

    // At equilibrium for any t in B, J*(U) <= J(U, t).
    std::vector<double> feasible(6, 0.5);
    const EquilibriumSolution eq = equilibrium(inst.mesh, dm, lin, feasible, inst.bc);
    CHECK(dual_bound(inst.mesh, dm, lin, inst.bc, eq.U, 0.5) <= eq.compliance * (1 + 1e-12));
}

TEST_CASE("continuation schedule") {
    OptConfig cfg;
    const std::vector<double> s = continuation_schedule(cfg);
    REQUIRE(s.size() == 10);
    CHECK(s.front() == 0.95);
    CHECK(s.back() == 0.5);
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i - 1] - s[i] == doctest::Approx(0.05).epsilon(1e-12));
    cfg.t1_start = cfg.t1_target;
    CHECK(continuation_schedule(cfg) == std::vector<double>{0.5});
}

TEST_CASE("run_dual_lp: single active element needs one iteration") {
    const GridMesh mesh = build_grid(1, 1, 1.0, 1.0);
    const BoundaryConditions bc = make_boundary_conditions(mesh, {0, 1, 2, 3}, {{5, -1.0}});
    OptConfig cfg;
    cfg.t1_target = 0.3;
    cfg.t1_start = 0.3;
    const OptRun run = run_dual_lp(mesh, bc, unit_material(3.0), cfg);
    CHECK(run.history.size() == 1);
    CHECK(run.converged);
    CHECK(run.final_field.t[0] == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("run_dual_lp: 2x1 cantilever matches brute-force search") {
    const CaseInstance inst = instantiate(with_mesh(find_case("cantilever"), 2, 1));
    const MaterialModel lin = make_material(210e9, 210e3, 0.33, 1.0, Interpolation::linear);
    const DofMap dm = build_dofmap(inst.mesh);

    // Equal areas: t0 + t1 = 1 on the 101-point grid, inside [t_floor, 1].
    double best = std::numeric_limits<double>::infinity();
    double best_t0 = 0.0;
    for (int k = 0; k <= 100; ++k) {
        const double t0 = k / 100.0, t1 = 1.0 - t0;
        if (t0 < 1e-3 || t1 < 1e-3) continue;
        const std::vector<double> t{t0, t1};
        const double c = equilibrium(inst.mesh, dm, lin, t, inst.bc).compliance;
        if (c < best) {
            best = c;
            best_t0 = t0;
        }
    }

    OptConfig cfg;
    cfg.change_tol = 1e-5;
    cfg.stage_iterations = 200;
    const OptRun run = run_dual_lp(inst.mesh, inst.bc, lin, cfg);
    CHECK(run.converged);
    CHECK(std::abs(run.final_field.t[0] - best_t0) <= 0.01 + 1e-12);
    CHECK(std::abs(run.final_field.t[1] - (1.0 - best_t0)) <= 0.01 + 1e-12);
    CHECK(run.final_solution.compliance <= best * (1 + 1e-9));
}

TEST_CASE("run_dual_lp invariants on a small cantilever") {
    const CaseInstance inst = instantiate(with_mesh(find_case("cantilever"), 12, 10));
    OptConfig cfg;
    cfg.stage_iterations = 10;

    SUBCASE("p = 1: weak duality and volume at every iterate") {
        const MaterialModel lin = make_material(210e9, 210e3, 0.33, 1.0, Interpolation::linear);
        const OptRun run = run_dual_lp(inst.mesh, inst.bc, lin, cfg);
        REQUIRE(!run.history.empty());
        double prev_fraction = 1.0;
        for (const IterationRecord& r : run.history) {
            REQUIRE(r.duality_gap.has_value());
            CHECK(*r.duality_gap >= -1e-9 * std::abs(r.objective));
            CHECK(std::isfinite(r.objective));
            CHECK(rel_diff(r.objective, r.external_work) < 1e-8);
            CHECK(r.volume_fraction <= prev_fraction + 1e-12);
            prev_fraction = r.volume_fraction;
        }
        CHECK(rel_diff(run.final_field.volume_fraction(), 0.5) < 1e-8);
    }

    SUBCASE("p = 3: no gap column, deterministic trace") {
        const MaterialModel simp{};
        const OptRun a = run_dual_lp(inst.mesh, inst.bc, simp, cfg);
        const OptRun b = run_dual_lp(inst.mesh, inst.bc, simp, cfg);
        REQUIRE(a.history.size() == b.history.size());
        for (std::size_t i = 0; i < a.history.size(); ++i) {
            CHECK(!a.history[i].duality_gap.has_value());
            CHECK(a.history[i].iteration == static_cast<int>(i) + 1);
            CHECK(a.history[i].objective == b.history[i].objective);
            CHECK(a.history[i].max_change == b.history[i].max_change);
        }
        CHECK(a.final_field.t == b.final_field.t);
        CHECK(rel_diff(a.final_field.volume_fraction(), 0.5) < 1e-8);
    }
}

TEST_CASE("run_dual_lp: converged p = 1 run has a stationary gap") {
    const CaseInstance inst = instantiate(with_mesh(find_case("cantilever"), 6, 4));
    const MaterialModel lin = make_material(210e9, 210e3, 0.33, 1.0, Interpolation::linear);
    OptConfig cfg;
    cfg.stage_iterations = 200;
    const OptRun run = run_dual_lp(inst.mesh, inst.bc, lin, cfg);
    REQUIRE(run.converged);
    REQUIRE(run.history.size() >= 2);
    const auto& last = run.history.back();
    const auto& prev = run.history[run.history.size() - 2];
    CHECK(std::abs(*last.duality_gap - *prev.duality_gap) < cfg.change_tol * std::abs(last.objective));
}

TEST_CASE("run_dual_lp rejects bad configuration") {
    const CaseInstance inst = instantiate(with_mesh(find_case("cantilever"), 4, 3));
    OptConfig cfg;
    cfg.t1_target = 0.99;
    CHECK_THROWS_AS(run_dual_lp(inst.mesh, inst.bc, MaterialModel{}, cfg), InvalidArgument);
    cfg = OptConfig{};
    cfg.move_limit = 0.0;
    CHECK_THROWS_AS(run_dual_lp(inst.mesh, inst.bc, MaterialModel{}, cfg), InvalidArgument);
}
