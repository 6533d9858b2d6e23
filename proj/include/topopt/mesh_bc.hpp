#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace topopt {

/**
 * Structured grid of bilinear quads over [0, width] x [0, height].
 *
 * Nodes are numbered column-major with y running fastest:
 *   node(ix, iy) = ix * (nely + 1) + iy
 * and elements likewise:
 *   element(ex, ey) = ex * nely + ey
 * Node n carries DOFs 2n (ux) and 2n + 1 (uy).
 */
struct GridMesh {
    int nelx = 0;
    int nely = 0;
    double width = 0.0;
    double height = 0.0;
    std::vector<char> active;  ///< per element, nonzero = material region

    double hx() const { return width / nelx; }
    double hy() const { return height / nely; }
    int num_elements() const { return nelx * nely; }
    int num_nodes() const { return (nelx + 1) * (nely + 1); }
    int num_dofs() const { return 2 * num_nodes(); }
    int num_active() const;

    int node(int ix, int iy) const { return ix * (nely + 1) + iy; }
    int element(int ex, int ey) const { return ex * nely + ey; }
    int element_x(int e) const { return e / nely; }
    int element_y(int e) const { return e % nely; }
    bool is_active(int e) const { return active[static_cast<std::size_t>(e)] != 0; }

    /// Center of element e in physical coordinates.
    std::pair<double, double> center(int e) const;
    /// Coordinates of node n.
    std::pair<double, double> node_position(int n) const;

    /// Area of one element (unit thickness).
    double element_area() const { return hx() * hy(); }
    double active_area() const { return num_active() * element_area(); }
};

/// Dirichlet supports (zero displacement) and nodal point loads.
struct BoundaryConditions {
    std::vector<int> fixed_dofs;                 ///< sorted, unique
    std::vector<std::pair<int, double>> loads;   ///< (dof, force in N)
};

/// Global DOFs of an element's corners in counter-clockwise order starting
/// bottom-left: (ux, uy) of BL, BR, TR, TL.
using ElementDofs = std::array<int, 8>;

struct DofMap {
    std::vector<ElementDofs> elements;
};

GridMesh build_grid(int nelx, int nely, double width, double height);

using CenterPredicate = std::function<bool(double x, double y)>;

/// Returns a copy whose active set is predicate(center) for each element.
/// Throws InvalidDomain if no element stays active.
GridMesh apply_mask(const GridMesh& mesh, const CenterPredicate& predicate);

ElementDofs element_dofs(const GridMesh& mesh, int e);

DofMap build_dofmap(const GridMesh& mesh);

/// Sorts and deduplicates fixed DOFs and checks the BC against the mesh.
/// Throws InvalidArgument on out-of-range indices, loads on fixed DOFs, or
/// fewer than three supports.
BoundaryConditions make_boundary_conditions(const GridMesh& mesh, std::vector<int> fixed_dofs,
                                            std::vector<std::pair<int, double>> loads);

void validate(const BoundaryConditions& bc, const GridMesh& mesh);

/// Nearest node to (x, y); ties go to the lower node index.
int nearest_node(const GridMesh& mesh, double x, double y);

/// True if node n is a corner of at least one active element.
bool node_touches_active(const GridMesh& mesh, int n);

}  // namespace topopt
