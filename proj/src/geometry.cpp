#include "lesionrev/geometry.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace lesionrev {

int GridGeometry::min_dim() const { return std::min({dims[0], dims[1], dims[2]}); }

void GridGeometry::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (dims[static_cast<std::size_t>(a)] < 2) {
            throw std::invalid_argument("grid dimension " + std::to_string(a) + " must be >= 2");
        }
        const double s = spacing[static_cast<std::size_t>(a)];
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw std::invalid_argument("grid spacing " + std::to_string(a) + " must be positive");
        }
    }
}

GridGeometry make_geometry(std::array<int, 3> dims, std::array<double, 3> spacing, std::array<double, 3> origin) {
    GridGeometry g{dims, spacing, origin};
    g.validate();
    return g;
}

GridGeometry default_geometry() { return make_geometry({48, 48, 40}, {2.0, 2.0, 2.0}); }

void require_same_geometry(const GridGeometry &a, const GridGeometry &b, const char *what) {
    if (a.dims != b.dims) {
        throw std::invalid_argument(std::string(what) + ": geometry mismatch");
    }
}

} // namespace lesionrev
