#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "test_support.hpp"
#include "topopt/bench_cases.hpp"
#include "topopt/errors.hpp"
#include "topopt/opt_oc_filter.hpp"

using namespace topopt;
using topopt::test::rel_diff;

namespace {

std::set<int> raised(const DensityField& f, double t1) {
    std::set<int> s;
    for (std::size_t e = 0; e < f.size(); ++e)
        if (f.t[e] > t1 + 1e-12) s.insert(static_cast<int>(e));
    return s;
}

}  // namespace

TEST_CASE("filter_sensitivities identities") {
    const GridMesh mesh = build_grid(5, 4, 1.0, 1.0);
    DensityField field = make_density_field(mesh, 0.5);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> dist(-2.0, 0.0), tdist(0.1, 1.0);
    std::vector<double> g(20);
    for (double& v : g) v = dist(rng);
    for (double& t : field.t) t = tdist(rng);

    CHECK(filter_sensitivities(mesh, field, g, FilterSpec{0.9}) == g);
    CHECK(filter_sensitivities(mesh, field, g, FilterSpec{0.0}) == g);

    const DensityField uniform = make_density_field(mesh, 0.4);
    const std::vector<double> flat(20, -1.25);
    for (double v : filter_sensitivities(mesh, uniform, flat, FilterSpec{2.5})) CHECK(rel_diff(v, -1.25) < 1e-14);

    for (double v : filter_sensitivities(mesh, field, g, FilterSpec{1.5})) CHECK(v <= 0.0);

    CHECK_THROWS_AS(filter_sensitivities(mesh, field, std::vector<double>(3, -1.0), FilterSpec{}), InvalidArgument);
}

TEST_CASE("filter_sensitivities: delta at the center of a 3x3 mesh") {
    const GridMesh mesh = build_grid(3, 3, 1.0, 1.0);
    const DensityField field = make_density_field(mesh, 0.5);
    const int c = mesh.element(1, 1);
    std::vector<double> g(9, 0.0);
    g[c] = -1.0;
    const std::vector<double> out = filter_sensitivities(mesh, field, g, FilterSpec{1.5});

    // Hand evaluation of cone weights with uniform t: self 1.5, edge 0.5,
    // diagonal 1.5 - sqrt(2); the receiver normalizes by its own weight sum.
    const double self = 1.5, edge = 0.5, diag = 1.5 - std::sqrt(2.0);
    CHECK(rel_diff(out[c], -self / (self + 4 * edge + 4 * diag)) < 1e-14);
    const double edge_sum = self + 3 * edge + 2 * diag;  // e.g. (0, 1): neighbours (1,1), (0,0), (0,2), diag (1,0), (1,2)
    for (const auto [ex, ey] : {std::pair{0, 1}, {2, 1}, {1, 0}, {1, 2}})
        CHECK(rel_diff(out[mesh.element(ex, ey)], -edge / edge_sum) < 1e-14);
    const double corner_sum = self + 2 * edge + diag;
    for (const auto [ex, ey] : {std::pair{0, 0}, {2, 0}, {0, 2}, {2, 2}})
        CHECK(rel_diff(out[mesh.element(ex, ey)], -diag / corner_sum) < 1e-14);
}

TEST_CASE("filter skips inactive elements") {
    const GridMesh mesh = apply_mask(build_grid(3, 1, 3.0, 1.0), [](double x, double) { return x < 2.0; });
    const DensityField field = make_density_field(mesh, 0.5);
    const std::vector<double> g{-1.0, -3.0, -100.0};
    const std::vector<double> out = filter_sensitivities(mesh, field, g, FilterSpec{1.5});
    CHECK(rel_diff(out[0], -(1.5 * 1 + 0.5 * 3) / 2.0) < 1e-14);
    CHECK(rel_diff(out[1], -(1.5 * 3 + 0.5 * 1) / 2.0) < 1e-14);
    CHECK(out[2] == -100.0);
}

TEST_CASE("oc_update examples") {
    const GridMesh two = build_grid(2, 1, 2.0, 1.0);
    const DensityField half = make_density_field(two, 0.5);

    SUBCASE("fixed point") {
        const DensityField next = oc_update(half, std::vector<double>{-2.0, -2.0}, 0.5);
        CHECK(next.t[0] == doctest::Approx(0.5).epsilon(1e-6));
        CHECK(next.t[1] == doctest::Approx(0.5).epsilon(1e-6));
    }

    SUBCASE("interior of the move window") {
        // sqrt ratio 2 : 1 with sum 1 gives (2/3, 1/3), inside [0.3, 0.7].
        const DensityField next = oc_update(half, std::vector<double>{-4.0, -1.0}, 0.5);
        CHECK(next.t[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-5));
        CHECK(next.t[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
    }

    SUBCASE("both move bounds bind") {
        const DensityField next = oc_update(half, std::vector<double>{-9.0, -1.0}, 0.5);
        CHECK(next.t[0] == doctest::Approx(0.7).epsilon(1e-6));
        CHECK(next.t[1] == doctest::Approx(0.3).epsilon(1e-6));
    }

    SUBCASE("errors") {
        CHECK_THROWS_AS(oc_update(half, std::vector<double>{-1.0, 0.5}, 0.5), InvalidArgument);
        CHECK_THROWS_AS(oc_update(half, std::vector<double>{-1.0}, 0.5), InvalidArgument);
        // Zero sensitivities pin every element to its lower bound for any lambda.
        CHECK_THROWS_AS(oc_update(half, std::vector<double>{0.0, 0.0}, 0.5), MultiplierNotFound);
    }
}

TEST_CASE("oc_update volume equality and lambda monotonicity on random instances") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const GridMesh mesh = build_grid(6, 5, 1.2, 1.0);
        DensityField field = make_density_field(mesh, 0.5);
        std::vector<double> g(30);
        for (std::size_t e = 0; e < 30; ++e) {
            field.t[e] = 0.05 + 0.9 * u01(rng);
            g[e] = -std::exp(6.0 * u01(rng) - 3.0);
        }
        const double t1 = 0.3 + 0.4 * u01(rng);
        // Rescale the previous field to a feasible neighbourhood of t1.
        const double scale = t1 / field.volume_fraction();
        for (double& t : field.t) t = std::clamp(t * scale, 0.01, 1.0);

        const DensityField next = oc_update(field, g, t1);
        CHECK(rel_diff(next.volume_fraction(), t1) <= 1e-6);

        double prev_vol = std::numeric_limits<double>::infinity();
        for (double lambda = 1e-4; lambda < 1e4; lambda *= 1.7) {
            const std::vector<double> t = oc_step(field, g, lambda, 0.2, 0.5);
            double vol = 0.0;
            for (std::size_t e = 0; e < t.size(); ++e) vol += t[e] * field.volume[e];
            CHECK(vol <= prev_vol);
            prev_vol = vol;
        }
    }
}

TEST_CASE("run_oc: single element reaches t1 in one iteration") {
    const GridMesh mesh = build_grid(1, 1, 1.0, 1.0);
    const BoundaryConditions bc = make_boundary_conditions(mesh, {0, 1, 2, 3}, {{5, -1.0}});
    OcConfig cfg;
    cfg.t1 = 0.3;
    cfg.filter.rmin = 0.5;
    const OptRun run = run_oc(mesh, bc, MaterialModel{}, cfg);
    CHECK(run.history.size() == 1);
    CHECK(run.converged);
    CHECK(run.final_field.t[0] == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("first OC and knapsack iterates select nested top-energy sets") {
    const CaseInstance inst = instantiate(with_mesh(find_case("cantilever"), 4, 3), 0.5);
    const MaterialModel lin = make_material(210e9, 210e3, 0.33, 1.0, Interpolation::linear);

    OcConfig oc;
    oc.filter.rmin = 0.5;
    oc.move = 1.0;
    oc.max_iterations = 1;
    const OptRun a = run_oc(inst.mesh, inst.bc, lin, oc);

    OptConfig lp;
    lp.t1_start = lp.t1_target = 0.5;
    lp.move_limit = 1.0;
    lp.stage_iterations = 1;
    lp.max_outer_iterations = 1;
    const OptRun b = run_dual_lp(inst.mesh, inst.bc, lin, lp);

    // Both updates start from the same uniform field, so both rank elements
    // by the same energies; the raised sets are prefixes of that ranking.
    const DofMap dm = build_dofmap(inst.mesh);
    const DensityField start = make_density_field(inst.mesh, 0.5);
    const EquilibriumSolution sol = equilibrium(inst.mesh, dm, lin, start.t, inst.bc);
    const std::vector<double> q = unit_energies(inst.mesh, dm, lin.nu, sol.U);
    const int top = static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());

    const std::set<int> sa = raised(a.final_field, 0.5), sb = raised(b.final_field, 0.5);
    REQUIRE(!sa.empty());
    REQUIRE(!sb.empty());
    CHECK(sa.count(top) == 1);
    CHECK(sb.count(top) == 1);
    const bool nested = std::includes(sa.begin(), sa.end(), sb.begin(), sb.end()) ||
                        std::includes(sb.begin(), sb.end(), sa.begin(), sa.end());
    CHECK(nested);
    for (int e : sa)
        for (std::size_t i = 0; i < q.size(); ++i)
            if (!sa.count(static_cast<int>(i))) CHECK(q[e] >= q[i]);
}

TEST_CASE("run_oc keeps the volume fraction at every iterate") {
    const CaseInstance inst = instantiate(with_mesh(find_case("cantilever"), 30, 25));
    OcConfig cfg;
    cfg.max_iterations = 15;
    const OptRun run = run_oc(inst.mesh, inst.bc, MaterialModel{}, cfg);
    REQUIRE(run.history.size() == 15);
    for (const IterationRecord& r : run.history) {
        CHECK(rel_diff(r.volume_fraction, 0.5) <= 1e-6);
        CHECK(!r.duality_gap.has_value());
        CHECK(rel_diff(r.objective, r.external_work) < 1e-8);
    }
    CHECK(rel_diff(run.final_field.volume_fraction(), 0.5) <= 1e-6);
    CHECK(run.history.back().objective < run.history.front().objective);
}

TEST_CASE("OC configuration validation") {
    const GridMesh mesh = build_grid(4, 3, 1.0, 1.0);
    OcConfig cfg;
    cfg.filter.rmin = 4.0;
    CHECK_THROWS_AS(validate(cfg, mesh), InvalidArgument);
    cfg = OcConfig{};
    cfg.t1 = 1.5;
    CHECK_THROWS_AS(validate(cfg, mesh), InvalidArgument);
    cfg = OcConfig{};
    cfg.move = 0.0;
    CHECK_THROWS_AS(validate(cfg, mesh), InvalidArgument);
}
