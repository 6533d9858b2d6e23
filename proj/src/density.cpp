#include "topopt/density.hpp"

#include <cmath>
#include <string>

#include "topopt/errors.hpp"

namespace topopt {

double DensityField::active_volume() const {
    double v = 0.0;
    for (double ve : volume) v += ve;
    return v;
}

double DensityField::material_volume() const {
    double v = 0.0;
    for (std::size_t e = 0; e < t.size(); ++e) v += t[e] * volume[e];
    return v;
}

DensityField make_density_field(const GridMesh& mesh, double value, double t_floor) {
    if (!(t_floor > 0.0 && t_floor < 1.0)) throw InvalidArgument("density floor must lie in (0, 1)");
    if (!(value >= t_floor && value <= 1.0))
        throw InvalidArgument("initial density " + std::to_string(value) + " outside [t_floor, 1]");
    DensityField field;
    field.target_fraction = value;
    field.t_floor = t_floor;
    field.t.resize(static_cast<std::size_t>(mesh.num_elements()));
    field.volume.resize(field.t.size());
    const double area = mesh.element_area();
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto i = static_cast<std::size_t>(e);
        field.t[i] = mesh.is_active(e) ? value : t_floor;
        field.volume[i] = mesh.is_active(e) ? area : 0.0;
    }
    return field;
}

double max_change(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("max_change: length mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace topopt
