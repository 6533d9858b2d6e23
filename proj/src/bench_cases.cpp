#include "topopt/bench_cases.hpp"

#include <algorithm>

#include "topopt/errors.hpp"

namespace topopt {

std::vector<CaseSpec> case_catalog() {
    std::vector<CaseSpec> cases;

    CaseSpec cantilever;
    cantilever.name = "cantilever";
    cantilever.width = 1.0;
    cantilever.height = 0.5;
    cantilever.nelx = 60;
    cantilever.nely = 50;
    cantilever.force = -1e6;
    cantilever.load_x = 1.0;
    cantilever.load_y = 0.25;
    cantilever.support = SupportRule::clamp_left;
    cases.push_back(cantilever);

    CaseSpec simple;
    simple.name = "simply_supported";
    simple.width = 1.0;
    simple.height = 0.5;
    simple.nelx = 40;
    simple.nely = 50;
    simple.force = -1e7;
    simple.load_x = 0.5;
    simple.load_y = 0.5;
    simple.support = SupportRule::simple_bottom_corners;
    cases.push_back(simple);

    CaseSpec hole;
    hole.name = "hole_cantilever";
    hole.width = 1.0;
    hole.height = 0.6;
    hole.nelx = 50;
    hole.nely = 40;
    hole.force = -1e6;
    hole.load_x = 1.0;
    hole.load_y = 0.3;
    hole.support = SupportRule::clamp_left;
    hole.mask = MaskRule::hole;
    hole.hole_cx = 0.5;
    hole.hole_cy = 0.3;
    hole.hole_r = 0.15 * hole.height;
    cases.push_back(hole);

    // Vertical arm on the left clamped at y = 1, horizontal arm along the
    // bottom, loaded at the tip of the bottom arm.
    CaseSpec ell;
    ell.name = "l_shape";
    ell.width = 1.0;
    ell.height = 1.0;
    ell.nelx = 40;
    ell.nely = 60;
    ell.force = -1e8;
    ell.load_x = 1.0;
    ell.load_y = 0.25;
    ell.support = SupportRule::clamp_top;
    ell.mask = MaskRule::l_shape;
    cases.push_back(ell);

    return cases;
}

CaseSpec find_case(const std::string& name) {
    for (const CaseSpec& c : case_catalog())
        if (c.name == name) return c;
    throw InvalidCase("unknown case '" + name + "'");
}

CaseSpec with_mesh(CaseSpec spec, int nelx, int nely) {
    spec.nelx = nelx;
    spec.nely = nely;
    return spec;
}

CaseInstance instantiate(const CaseSpec& spec, double t_start, double t_floor) {
    if (!(spec.width > 0.0 && spec.height > 0.0) || spec.nelx < 1 || spec.nely < 1)
        throw InvalidCase("case '" + spec.name + "': dimensions and mesh must be positive");

    CaseInstance inst;
    inst.mesh = build_grid(spec.nelx, spec.nely, spec.width, spec.height);
    try {
        switch (spec.mask) {
            case MaskRule::none:
                break;
            case MaskRule::hole: {
                const double cx = spec.hole_cx, cy = spec.hole_cy, r2 = spec.hole_r * spec.hole_r;
                inst.mesh = apply_mask(inst.mesh, [=](double x, double y) {
                    return (x - cx) * (x - cx) + (y - cy) * (y - cy) > r2;
                });
                break;
            }
            case MaskRule::l_shape: {
                const double hw = 0.5 * spec.width, hh = 0.5 * spec.height;
                inst.mesh = apply_mask(inst.mesh, [=](double x, double y) { return !(x > hw && y > hh); });
                break;
            }
        }
    } catch (const InvalidDomain& err) {
        throw InvalidCase("case '" + spec.name + "': " + err.what());
    }
    const GridMesh& mesh = inst.mesh;

    std::vector<int> fixed;
    switch (spec.support) {
        case SupportRule::clamp_left:
            for (int iy = 0; iy <= mesh.nely; ++iy) {
                const int n = mesh.node(0, iy);
                if (!node_touches_active(mesh, n)) continue;
                fixed.push_back(2 * n);
                fixed.push_back(2 * n + 1);
            }
            break;
        case SupportRule::simple_bottom_corners:
            fixed.push_back(2 * mesh.node(0, 0));
            fixed.push_back(2 * mesh.node(0, 0) + 1);
            fixed.push_back(2 * mesh.node(mesh.nelx, 0) + 1);
            break;
        case SupportRule::clamp_top:
            for (int ix = 0; ix <= mesh.nelx; ++ix) {
                const int n = mesh.node(ix, mesh.nely);
                if (!node_touches_active(mesh, n)) continue;
                fixed.push_back(2 * n);
                fixed.push_back(2 * n + 1);
            }
            break;
    }

    inst.load_node = nearest_node(mesh, spec.load_x, spec.load_y);
    if (!node_touches_active(mesh, inst.load_node))
        throw InvalidCase("case '" + spec.name + "': load node lies in void");
    const int load_dof = 2 * inst.load_node + 1;
    if (std::find(fixed.begin(), fixed.end(), load_dof) != fixed.end())
        throw InvalidCase("case '" + spec.name + "': load applied on a fixed DOF");

    try {
        inst.bc = make_boundary_conditions(mesh, std::move(fixed), {{load_dof, spec.force}});
    } catch (const InvalidArgument& err) {
        throw InvalidCase("case '" + spec.name + "': " + err.what());
    }
    inst.seed = make_density_field(mesh, t_start, t_floor);
    return inst;
}

const char* to_string(SupportRule rule) {
    switch (rule) {
        case SupportRule::clamp_left: return "clamp_left";
        case SupportRule::simple_bottom_corners: return "simple_bottom_corners";
        case SupportRule::clamp_top: return "clamp_top";
    }
    return "?";
}

const char* to_string(MaskRule rule) {
    switch (rule) {
        case MaskRule::none: return "none";
        case MaskRule::hole: return "hole";
        case MaskRule::l_shape: return "l_shape";
    }
    return "?";
}

}  // namespace topopt
