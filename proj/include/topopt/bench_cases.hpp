#pragma once

#include <string>
#include <vector>

#include "topopt/density.hpp"
#include "topopt/mesh_bc.hpp"

namespace topopt {

enum class SupportRule {
    clamp_left,             ///< ux = uy = 0 on every node at x = 0
    simple_bottom_corners,  ///< ux = uy = 0 at (0, 0), uy = 0 at (width, 0)
    clamp_top,              ///< ux = uy = 0 on nodes at y = height touching active material
};

enum class MaskRule { none, hole, l_shape };

/// Benchmark geometry, supports and a single point load along -y.
struct CaseSpec {
    std::string name;
    double width = 1.0;
    double height = 0.5;
    int nelx = 1;
    int nely = 1;
    double force = 0.0;   ///< y component of the point load (N)
    double load_x = 0.0;  ///< load applied at the node nearest (load_x, load_y)
    double load_y = 0.0;
    SupportRule support = SupportRule::clamp_left;
    MaskRule mask = MaskRule::none;
    double t1 = 0.5;
    double hole_cx = 0.0;  ///< hole mask only
    double hole_cy = 0.0;
    double hole_r = 0.0;
};

struct CaseInstance {
    GridMesh mesh;
    BoundaryConditions bc;
    DensityField seed;
    int load_node = -1;
};

/// The four benchmarks: cantilever, simply_supported, hole_cantilever, l_shape.
std::vector<CaseSpec> case_catalog();

/// Catalog entry by name; throws InvalidCase for unknown names.
CaseSpec find_case(const std::string& name);

/// Same case on a different mesh; geometry, load point and hole stay put.
CaseSpec with_mesh(CaseSpec spec, int nelx, int nely);

/// Builds mesh, mask, supports and load, plus a uniform seed at t_start.
/// Throws InvalidCase when the load lands on a fixed or void node.
CaseInstance instantiate(const CaseSpec& spec, double t_start = 0.95, double t_floor = 1e-3);

const char* to_string(SupportRule rule);
const char* to_string(MaskRule rule);

}  // namespace topopt
