#pragma once

// Low-level grid kernels shared by scalar volumes and vector fields.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "lesionrev/geometry.hpp"

namespace lesionrev::kernels {

// Clamp-to-edge trilinear interpolation at continuous voxel coordinate (x,y,z).
// Weights are written as (1-t)*a + t*b so integer coordinates return stored
// values bit for bit.
template <class T>
inline T trilinear(const T *data, const std::array<int, 3> &dims, double x, double y, double z) {
    const int nx = dims[0], ny = dims[1], nz = dims[2];
    x = std::clamp(x, 0.0, static_cast<double>(nx - 1));
    y = std::clamp(y, 0.0, static_cast<double>(ny - 1));
    z = std::clamp(z, 0.0, static_cast<double>(nz - 1));
    int x0 = static_cast<int>(x), y0 = static_cast<int>(y), z0 = static_cast<int>(z);
    if (x0 > nx - 2) x0 = nx - 2;
    if (y0 > ny - 2) y0 = ny - 2;
    if (z0 > nz - 2) z0 = nz - 2;
    const double fx = x - x0, fy = y - y0, fz = z - z0;
    const double gx = 1.0 - fx, gy = 1.0 - fy, gz = 1.0 - fz;
    const std::size_t sx = 1, sy = static_cast<std::size_t>(nx), sz = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    const std::size_t b = static_cast<std::size_t>(x0) + sy * static_cast<std::size_t>(y0) + sz * static_cast<std::size_t>(z0);
    const T c00 = data[b] * gx + data[b + sx] * fx;
    const T c10 = data[b + sy] * gx + data[b + sy + sx] * fx;
    const T c01 = data[b + sz] * gx + data[b + sz + sx] * fx;
    const T c11 = data[b + sz + sy] * gx + data[b + sz + sy + sx] * fx;
    const T c0 = c00 * gy + c10 * fy;
    const T c1 = c01 * gy + c11 * fy;
    return c0 * gz + c1 * fz;
}

// Value and analytic gradient of the clamped trilinear interpolant of a scalar
// grid. Outside the grid along an axis the derivative along that axis is zero.
struct ValueGradient {
    double value = 0.0;
    Vec3 gradient;
};

inline ValueGradient trilinear_with_gradient(const double *data, const std::array<int, 3> &dims, double x, double y, double z) {
    const int nx = dims[0], ny = dims[1], nz = dims[2];
    const bool inx = x >= 0.0 && x <= nx - 1;
    const bool iny = y >= 0.0 && y <= ny - 1;
    const bool inz = z >= 0.0 && z <= nz - 1;
    x = std::clamp(x, 0.0, static_cast<double>(nx - 1));
    y = std::clamp(y, 0.0, static_cast<double>(ny - 1));
    z = std::clamp(z, 0.0, static_cast<double>(nz - 1));
    int x0 = std::min(static_cast<int>(x), nx - 2);
    int y0 = std::min(static_cast<int>(y), ny - 2);
    int z0 = std::min(static_cast<int>(z), nz - 2);
    const double fx = x - x0, fy = y - y0, fz = z - z0;
    const std::size_t sy = static_cast<std::size_t>(nx), sz = sy * static_cast<std::size_t>(ny);
    const std::size_t b = static_cast<std::size_t>(x0) + sy * static_cast<std::size_t>(y0) + sz * static_cast<std::size_t>(z0);
    const double v000 = data[b], v100 = data[b + 1], v010 = data[b + sy], v110 = data[b + sy + 1];
    const double v001 = data[b + sz], v101 = data[b + sz + 1], v011 = data[b + sz + sy], v111 = data[b + sz + sy + 1];
    ValueGradient out;
    const double c00 = v000 * (1 - fx) + v100 * fx, c10 = v010 * (1 - fx) + v110 * fx;
    const double c01 = v001 * (1 - fx) + v101 * fx, c11 = v011 * (1 - fx) + v111 * fx;
    const double c0 = c00 * (1 - fy) + c10 * fy, c1 = c01 * (1 - fy) + c11 * fy;
    out.value = c0 * (1 - fz) + c1 * fz;
    const double dx = ((v100 - v000) * (1 - fy) + (v110 - v010) * fy) * (1 - fz) + ((v101 - v001) * (1 - fy) + (v111 - v011) * fy) * fz;
    const double dy = (c10 - c00) * (1 - fz) + (c11 - c01) * fz;
    const double dz = c1 - c0;
    out.gradient = {inx ? dx : 0.0, iny ? dy : 0.0, inz ? dz : 0.0};
    return out;
}

// Normalized 1D Gaussian kernel truncated at +/- ceil(3 sigma).
inline std::vector<double> gaussian_kernel(double sigma) {
    if (sigma <= 0.0) return {1.0};
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = w;
        sum += w;
    }
    for (auto &w : k) w /= sum;
    return k;
}

// One separable convolution pass along `axis` with clamp-to-edge boundaries.
template <class T>
void convolve_axis(const T *in, T *out, const std::array<int, 3> &dims, int axis, const std::vector<double> &kernel) {
    const int nx = dims[0], ny = dims[1], nz = dims[2];
    const int radius = static_cast<int>(kernel.size() / 2);
    const int n_axis = dims[static_cast<std::size_t>(axis)];
    const std::size_t stride = axis == 0 ? 1 : (axis == 1 ? static_cast<std::size_t>(nx) : static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
#pragma omp parallel for schedule(static)
    for (int z = 0; z < nz; ++z) {
        for (int y = 0; y < ny; ++y) {
            for (int x = 0; x < nx; ++x) {
                const int c = axis == 0 ? x : (axis == 1 ? y : z);
                const std::size_t i = static_cast<std::size_t>(x) + static_cast<std::size_t>(nx) * (static_cast<std::size_t>(y) + static_cast<std::size_t>(ny) * static_cast<std::size_t>(z));
                const std::size_t base = i - static_cast<std::size_t>(c) * stride;
                T acc{};
                for (int k = -radius; k <= radius; ++k) {
                    const int j = std::clamp(c + k, 0, n_axis - 1);
                    acc += in[base + static_cast<std::size_t>(j) * stride] * kernel[static_cast<std::size_t>(k + radius)];
                }
                out[i] = acc;
            }
        }
    }
}

template <class T>
void gaussian_smooth_inplace(std::vector<T> &data, const std::array<int, 3> &dims, double sigma) {
    if (sigma <= 0.0) return;
    const auto kernel = gaussian_kernel(sigma);
    std::vector<T> tmp(data.size());
    convolve_axis(data.data(), tmp.data(), dims, 0, kernel);
    convolve_axis(tmp.data(), data.data(), dims, 1, kernel);
    convolve_axis(data.data(), tmp.data(), dims, 2, kernel);
    data.swap(tmp);
}

} // namespace lesionrev::kernels
