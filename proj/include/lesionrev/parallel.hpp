#pragma once

#include <cstddef>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

// Voxel loops are split over z-slices. Every slice writes only its own output
// range, and reductions go through per-slice partials summed in slice order, so
// results do not depend on the thread count.

namespace lesionrev {

inline int max_threads() {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_threads(int n) {
#if defined(_OPENMP)
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

// Deterministic sum of f(z) over z in [0, n).
template <class F>
double ordered_sum(int n, F &&f) {
    std::vector<double> partial(static_cast<std::size_t>(n > 0 ? n : 0), 0.0);
#pragma omp parallel for schedule(static)
    for (int z = 0; z < n; ++z) partial[static_cast<std::size_t>(z)] = f(z);
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

} // namespace lesionrev
