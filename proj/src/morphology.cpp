#include "lesionrev/morphology.hpp"

#include <stdexcept>

#include "lesionrev/noise_geom.hpp"

namespace lesionrev {

Mask within_distance(const Mask &m, double dist) {
    const auto d = distance_transform(m);
    Mask out(m.geometry());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = d[i] <= dist ? 1 : 0;
    return out;
}

Mask dilate(const Mask &m, double radius) {
    if (!(radius >= 0.0)) throw std::invalid_argument("dilate: radius must be >= 0");
    return within_distance(m, radius);
}

Mask erode(const Mask &m, double radius) {
    if (!(radius >= 0.0)) throw std::invalid_argument("erode: radius must be >= 0");
    return mask_not(within_distance(mask_not(m), radius));
}

Mask closing(const Mask &m, double radius) { return erode(dilate(m, radius), radius); }
Mask opening(const Mask &m, double radius) { return dilate(erode(m, radius), radius); }

Components connected_components(const Mask &m) {
    const auto &g = m.geometry();
    Components c{LabelVolume(g), {0}};
    std::vector<std::size_t> stack;
    std::int32_t next = 0;
    for (std::size_t seed = 0; seed < m.size(); ++seed) {
        if (!m[seed] || c.labels[seed] != 0) continue;
        ++next;
        std::size_t size = 0;
        stack.push_back(seed);
        c.labels[seed] = next;
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            ++size;
            const auto p = g.coords(i);
            static const int off[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
            for (const auto &o : off) {
                const int x = p[0] + o[0], y = p[1] + o[1], z = p[2] + o[2];
                if (!g.contains(x, y, z)) continue;
                const std::size_t j = g.index(x, y, z);
                if (m[j] && c.labels[j] == 0) {
                    c.labels[j] = next;
                    stack.push_back(j);
                }
            }
        }
        c.sizes.push_back(size);
    }
    return c;
}

Mask remove_small_components(const Mask &m, std::size_t min_size) {
    const auto c = connected_components(m);
    Mask out(m.geometry());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto l = c.labels[i];
        out[i] = (l > 0 && c.sizes[static_cast<std::size_t>(l)] >= min_size) ? 1 : 0;
    }
    return out;
}

Mask mask_and(const Mask &a, const Mask &b) {
    require_same_geometry(a.geometry(), b.geometry(), "mask_and");
    Mask out(a.geometry());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (a[i] && b[i]) ? 1 : 0;
    return out;
}

Mask mask_or(const Mask &a, const Mask &b) {
    require_same_geometry(a.geometry(), b.geometry(), "mask_or");
    Mask out(a.geometry());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (a[i] || b[i]) ? 1 : 0;
    return out;
}

Mask mask_not(const Mask &a) {
    Mask out(a.geometry());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] ? 0 : 1;
    return out;
}

} // namespace lesionrev
