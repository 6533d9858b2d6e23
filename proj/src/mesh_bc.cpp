#include "topopt/mesh_bc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "topopt/errors.hpp"

namespace topopt {

int GridMesh::num_active() const {
    return static_cast<int>(std::count_if(active.begin(), active.end(), [](char a) { return a != 0; }));
}

std::pair<double, double> GridMesh::center(int e) const {
    return {(element_x(e) + 0.5) * hx(), (element_y(e) + 0.5) * hy()};
}

std::pair<double, double> GridMesh::node_position(int n) const {
    const int ix = n / (nely + 1);
    const int iy = n % (nely + 1);
    return {ix * hx(), iy * hy()};
}

GridMesh build_grid(int nelx, int nely, double width, double height) {
    if (nelx <= 0 || nely <= 0)
        throw InvalidArgument("build_grid: element counts must be positive");
    if (!(width > 0.0) || !(height > 0.0))
        throw InvalidArgument("build_grid: extents must be positive");
    GridMesh mesh;
    mesh.nelx = nelx;
    mesh.nely = nely;
    mesh.width = width;
    mesh.height = height;
    mesh.active.assign(static_cast<std::size_t>(nelx) * nely, 1);
    return mesh;
}

GridMesh apply_mask(const GridMesh& mesh, const CenterPredicate& predicate) {
    GridMesh out = mesh;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto [x, y] = mesh.center(e);
        out.active[static_cast<std::size_t>(e)] = predicate(x, y) ? 1 : 0;
    }
    if (out.num_active() == 0)
        throw InvalidDomain("apply_mask: mask deactivates every element");
    return out;
}

ElementDofs element_dofs(const GridMesh& mesh, int e) {
    if (e < 0 || e >= mesh.num_elements())
        throw InvalidArgument("element_dofs: element index " + std::to_string(e) + " out of range");
    const int ex = mesh.element_x(e);
    const int ey = mesh.element_y(e);
    const std::array<int, 4> nodes = {mesh.node(ex, ey), mesh.node(ex + 1, ey), mesh.node(ex + 1, ey + 1),
                                      mesh.node(ex, ey + 1)};
    ElementDofs dofs{};
    for (std::size_t a = 0; a < 4; ++a) {
        dofs[2 * a] = 2 * nodes[a];
        dofs[2 * a + 1] = 2 * nodes[a] + 1;
    }
    return dofs;
}

DofMap build_dofmap(const GridMesh& mesh) {
    DofMap map;
    map.elements.reserve(static_cast<std::size_t>(mesh.num_elements()));
    for (int e = 0; e < mesh.num_elements(); ++e) map.elements.push_back(element_dofs(mesh, e));
    return map;
}

void validate(const BoundaryConditions& bc, const GridMesh& mesh) {
    const int ndof = mesh.num_dofs();
    if (!std::is_sorted(bc.fixed_dofs.begin(), bc.fixed_dofs.end()) ||
        std::adjacent_find(bc.fixed_dofs.begin(), bc.fixed_dofs.end()) != bc.fixed_dofs.end())
        throw InvalidArgument("boundary conditions: fixed DOFs must be sorted and unique");
    if (bc.fixed_dofs.size() < 3)
        throw InvalidArgument("boundary conditions: at least 3 fixed DOFs are required");
    for (int d : bc.fixed_dofs)
        if (d < 0 || d >= ndof) throw InvalidArgument("boundary conditions: fixed DOF " + std::to_string(d) + " out of range");
    for (const auto& [d, value] : bc.loads) {
        if (d < 0 || d >= ndof) throw InvalidArgument("boundary conditions: load DOF " + std::to_string(d) + " out of range");
        if (!std::isfinite(value)) throw InvalidArgument("boundary conditions: non-finite load");
        if (std::binary_search(bc.fixed_dofs.begin(), bc.fixed_dofs.end(), d))
            throw InvalidArgument("boundary conditions: DOF " + std::to_string(d) + " is both fixed and loaded");
    }
}

BoundaryConditions make_boundary_conditions(const GridMesh& mesh, std::vector<int> fixed_dofs,
                                            std::vector<std::pair<int, double>> loads) {
    std::sort(fixed_dofs.begin(), fixed_dofs.end());
    fixed_dofs.erase(std::unique(fixed_dofs.begin(), fixed_dofs.end()), fixed_dofs.end());
    BoundaryConditions bc{std::move(fixed_dofs), std::move(loads)};
    validate(bc, mesh);
    return bc;
}

int nearest_node(const GridMesh& mesh, double x, double y) {
    int best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int n = 0; n < mesh.num_nodes(); ++n) {
        const auto [nx, ny] = mesh.node_position(n);
        const double d2 = (nx - x) * (nx - x) + (ny - y) * (ny - y);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = n;
        }
    }
    return best;
}

bool node_touches_active(const GridMesh& mesh, int n) {
    const int ix = n / (mesh.nely + 1);
    const int iy = n % (mesh.nely + 1);
    for (int ex = ix - 1; ex <= ix; ++ex)
        for (int ey = iy - 1; ey <= iy; ++ey)
            if (ex >= 0 && ex < mesh.nelx && ey >= 0 && ey < mesh.nely && mesh.is_active(mesh.element(ex, ey)))
                return true;
    return false;
}

}  // namespace topopt
