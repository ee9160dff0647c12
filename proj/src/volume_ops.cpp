#include "lesionrev/volume_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lesionrev/kernels.hpp"
#include "lesionrev/parallel.hpp"

namespace lesionrev {

double sample_trilinear(const ScalarVolume &vol, const Vec3 &p) {
    if (!is_finite(p)) throw std::invalid_argument("sample_trilinear: non-finite coordinate");
    return kernels::trilinear(vol.data().data(), vol.dims(), p.x, p.y, p.z);
}

namespace {

// Central difference inside, one-sided at the two faces.
inline double axis_diff(const double *d, std::size_t i, int c, int n, std::size_t stride) {
    if (c == 0) return d[i + stride] - d[i];
    if (c == n - 1) return d[i] - d[i - stride];
    return 0.5 * (d[i + stride] - d[i - stride]);
}

} // namespace

std::vector<Vec3> spatial_gradient_vectors(const ScalarVolume &vol) {
    const auto &g = vol.geometry();
    const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
    if (g.min_dim() < 3) throw std::invalid_argument("spatial_gradient: dims must be >= 3");
    const std::size_t sy = static_cast<std::size_t>(nx), sz = sy * static_cast<std::size_t>(ny);
    const double *d = vol.data().data();
    std::vector<Vec3> out(vol.size());
#pragma omp parallel for schedule(static)
    for (int z = 0; z < nz; ++z) {
        for (int y = 0; y < ny; ++y) {
            for (int x = 0; x < nx; ++x) {
                const std::size_t i = g.index(x, y, z);
                out[i] = {axis_diff(d, i, x, nx, 1), axis_diff(d, i, y, ny, sy), axis_diff(d, i, z, nz, sz)};
            }
        }
    }
    return out;
}

std::array<ScalarVolume, 3> spatial_gradient(const ScalarVolume &vol) {
    const auto grad = spatial_gradient_vectors(vol);
    std::array<ScalarVolume, 3> out{ScalarVolume(vol.geometry()), ScalarVolume(vol.geometry()), ScalarVolume(vol.geometry())};
    for (std::size_t i = 0; i < grad.size(); ++i) {
        out[0][i] = grad[i].x;
        out[1][i] = grad[i].y;
        out[2][i] = grad[i].z;
    }
    return out;
}

ScalarVolume gaussian_smooth(const ScalarVolume &vol, double sigma) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("gaussian_smooth: sigma must be >= 0");
    std::vector<double> data(vol.data().begin(), vol.data().end());
    kernels::gaussian_smooth_inplace(data, vol.dims(), sigma);
    return ScalarVolume(vol.geometry(), std::move(data));
}

double histogram_peak_value(const ScalarVolume &vol, int bins) {
    if (bins < 16) throw std::invalid_argument("histogram_peak_normalize: bins must be >= 16");
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (double v : vol.data()) {
        if (v == 0.0) continue;
        if (!any) { lo = hi = v; any = true; }
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!any) throw std::invalid_argument("histogram_peak_normalize: volume is all zero");
    if (hi == lo) return lo;
    const double width = (hi - lo) / bins;
    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    for (double v : vol.data()) {
        if (v == 0.0) continue;
        const int b = std::min(bins - 1, static_cast<int>((v - lo) / width));
        ++counts[static_cast<std::size_t>(b)];
    }
    int best = 0;
    for (int b = 1; b < bins; ++b) {
        // >= breaks ties toward the higher-intensity bin
        if (counts[static_cast<std::size_t>(b)] >= counts[static_cast<std::size_t>(best)]) best = b;
    }
    return lo + (best + 0.5) * width;
}

ScalarVolume histogram_peak_normalize(const ScalarVolume &vol, int bins) {
    const double peak = histogram_peak_value(vol, bins);
    if (peak == 0.0) throw std::invalid_argument("histogram_peak_normalize: peak at zero");
    ScalarVolume out = vol;
    for (auto &v : out.data()) v /= peak;
    return out;
}

ScalarVolume box_mean(const ScalarVolume &vol, int radius) {
    if (radius < 0) throw std::invalid_argument("box_mean: radius must be >= 0");
    const auto &g = vol.geometry();
    const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
    // Summed-volume table with a zero border.
    const std::size_t px = static_cast<std::size_t>(nx) + 1, py = static_cast<std::size_t>(ny) + 1;
    std::vector<double> sat(px * py * (static_cast<std::size_t>(nz) + 1), 0.0);
    auto at = [&](int x, int y, int z) -> double & {
        return sat[static_cast<std::size_t>(x) + px * (static_cast<std::size_t>(y) + py * static_cast<std::size_t>(z))];
    };
    for (int z = 1; z <= nz; ++z)
        for (int y = 1; y <= ny; ++y)
            for (int x = 1; x <= nx; ++x)
                at(x, y, z) = vol(x - 1, y - 1, z - 1) + at(x - 1, y, z) + at(x, y - 1, z) + at(x, y, z - 1) -
                              at(x - 1, y - 1, z) - at(x - 1, y, z - 1) - at(x, y - 1, z - 1) + at(x - 1, y - 1, z - 1);
    ScalarVolume out(g);
#pragma omp parallel for schedule(static)
    for (int z = 0; z < nz; ++z) {
        const int z0 = std::max(0, z - radius), z1 = std::min(nz, z + radius + 1);
        for (int y = 0; y < ny; ++y) {
            const int y0 = std::max(0, y - radius), y1 = std::min(ny, y + radius + 1);
            for (int x = 0; x < nx; ++x) {
                const int x0 = std::max(0, x - radius), x1 = std::min(nx, x + radius + 1);
                const double s = at(x1, y1, z1) - at(x0, y1, z1) - at(x1, y0, z1) - at(x1, y1, z0) + at(x0, y0, z1) +
                                 at(x0, y1, z0) + at(x1, y0, z0) - at(x0, y0, z0);
                const double n = static_cast<double>(x1 - x0) * (y1 - y0) * (z1 - z0);
                out(x, y, z) = s / n;
            }
        }
    }
    return out;
}

GridGeometry downsample2_geometry(const GridGeometry &g) {
    GridGeometry c = g;
    for (std::size_t a = 0; a < 3; ++a) {
        c.dims[a] = (g.dims[a] + 1) / 2;
        c.spacing[a] = g.spacing[a] * 2.0;
    }
    c.validate();
    return c;
}

ScalarVolume downsample2(const ScalarVolume &vol) {
    const ScalarVolume smooth = gaussian_smooth(vol, 1.0);
    const GridGeometry cg = downsample2_geometry(vol.geometry());
    ScalarVolume out(cg);
    for (int z = 0; z < cg.dims[2]; ++z)
        for (int y = 0; y < cg.dims[1]; ++y)
            for (int x = 0; x < cg.dims[0]; ++x) out(x, y, z) = smooth(2 * x, 2 * y, 2 * z);
    return out;
}

ScalarVolume to_scalar(const Mask &m) {
    ScalarVolume out(m.geometry());
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 1.0 : 0.0;
    return out;
}

Mask threshold_mask(const ScalarVolume &vol, double level) {
    Mask out(vol.geometry());
    for (std::size_t i = 0; i < vol.size(); ++i) out[i] = vol[i] > level ? 1 : 0;
    return out;
}

double mean_of(const ScalarVolume &vol) {
    const auto &g = vol.geometry();
    const std::size_t slab = static_cast<std::size_t>(g.dims[0]) * static_cast<std::size_t>(g.dims[1]);
    const double *d = vol.data().data();
    const double s = ordered_sum(g.dims[2], [&](int z) {
        double acc = 0.0;
        for (std::size_t i = 0; i < slab; ++i) acc += d[static_cast<std::size_t>(z) * slab + i];
        return acc;
    });
    return s / static_cast<double>(vol.size());
}

double mean_squared_difference(const ScalarVolume &a, const ScalarVolume &b) {
    require_same_geometry(a.geometry(), b.geometry(), "mean_squared_difference");
    const auto &g = a.geometry();
    const std::size_t slab = static_cast<std::size_t>(g.dims[0]) * static_cast<std::size_t>(g.dims[1]);
    const double *pa = a.data().data();
    const double *pb = b.data().data();
    const double s = ordered_sum(g.dims[2], [&](int z) {
        double acc = 0.0;
        for (std::size_t i = static_cast<std::size_t>(z) * slab; i < static_cast<std::size_t>(z + 1) * slab; ++i) {
            const double d = pa[i] - pb[i];
            acc += d * d;
        }
        return acc;
    });
    return s / static_cast<double>(a.size());
}

bool all_finite(const ScalarVolume &vol) {
    return std::all_of(vol.data().begin(), vol.data().end(), [](double v) { return std::isfinite(v); });
}

} // namespace lesionrev
