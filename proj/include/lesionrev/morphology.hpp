#pragma once

#include <cstddef>
#include <vector>

#include "lesionrev/volume.hpp"

namespace lesionrev {

// Euclidean ball structuring elements. Voxels beyond the grid faces count as
// background for dilation and as foreground for erosion.
Mask dilate(const Mask &m, double radius);
Mask erode(const Mask &m, double radius);
Mask closing(const Mask &m, double radius);
Mask opening(const Mask &m, double radius);

// 6-connected component labels (1..n, 0 = background) and their sizes
// (sizes[0] unused).
struct Components {
    LabelVolume labels;
    std::vector<std::size_t> sizes;
};
Components connected_components(const Mask &m);

Mask remove_small_components(const Mask &m, std::size_t min_size);

Mask mask_and(const Mask &a, const Mask &b);
Mask mask_or(const Mask &a, const Mask &b);
Mask mask_not(const Mask &a);

// Voxels within `dist` (Euclidean) of the mask, mask included.
Mask within_distance(const Mask &m, double dist);

} // namespace lesionrev
