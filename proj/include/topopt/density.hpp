#pragma once

#include <span>
#include <vector>

#include "topopt/mesh_bc.hpp"

namespace topopt {

/// Per-element design densities with the element areas needed for volume
/// bookkeeping. Inactive elements are pinned at t_floor and carry no volume.
struct DensityField {
    std::vector<double> t;
    std::vector<double> volume;  ///< element area for active elements, 0 for inactive
    double target_fraction = 0.5;
    double t_floor = 1e-3;

    std::size_t size() const { return t.size(); }
    bool is_active(std::size_t e) const { return volume[e] > 0.0; }

    /// |Omega_active|.
    double active_volume() const;
    /// sum over active elements of t_e V_e.
    double material_volume() const;
    double volume_fraction() const { return material_volume() / active_volume(); }
};

/// Uniform field at `value` on active elements, t_floor elsewhere; the target
/// fraction is set to `value`.
DensityField make_density_field(const GridMesh& mesh, double value, double t_floor = 1e-3);

/// max_e |a_e - b_e|.
double max_change(std::span<const double> a, std::span<const double> b);

}  // namespace topopt
