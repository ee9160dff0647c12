#include "lesionrev/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace lesionrev::reference {

namespace {

std::vector<double> kernel_1d(double sigma) {
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k;
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        k.push_back(std::exp(-0.5 * i * i / (sigma * sigma)));
        sum += k.back();
    }
    for (auto &w : k) w /= sum;
    return k;
}

int clampi(int v, int n) { return std::min(std::max(v, 0), n - 1); }

double lerp_sample(const ScalarVolume &vol, double x, double y, double z) {
    const auto &d = vol.dims();
    x = std::clamp(x, 0.0, d[0] - 1.0);
    y = std::clamp(y, 0.0, d[1] - 1.0);
    z = std::clamp(z, 0.0, d[2] - 1.0);
    const int x0 = std::min(static_cast<int>(std::floor(x)), d[0] - 2);
    const int y0 = std::min(static_cast<int>(std::floor(y)), d[1] - 2);
    const int z0 = std::min(static_cast<int>(std::floor(z)), d[2] - 2);
    const double fx = x - x0, fy = y - y0, fz = z - z0;
    double acc = 0.0;
    for (int c = 0; c < 8; ++c) {
        const int ox = c & 1, oy = (c >> 1) & 1, oz = (c >> 2) & 1;
        const double w = (ox ? fx : 1 - fx) * (oy ? fy : 1 - fy) * (oz ? fz : 1 - fz);
        acc += w * vol(x0 + ox, y0 + oy, z0 + oz);
    }
    return acc;
}

Vec3 lerp_vec(const VectorField &f, double x, double y, double z) {
    const auto &d = f.dims();
    x = std::clamp(x, 0.0, d[0] - 1.0);
    y = std::clamp(y, 0.0, d[1] - 1.0);
    z = std::clamp(z, 0.0, d[2] - 1.0);
    const int x0 = std::min(static_cast<int>(std::floor(x)), d[0] - 2);
    const int y0 = std::min(static_cast<int>(std::floor(y)), d[1] - 2);
    const int z0 = std::min(static_cast<int>(std::floor(z)), d[2] - 2);
    const double fx = x - x0, fy = y - y0, fz = z - z0;
    Vec3 acc;
    for (int c = 0; c < 8; ++c) {
        const int ox = c & 1, oy = (c >> 1) & 1, oz = (c >> 2) & 1;
        const double w = (ox ? fx : 1 - fx) * (oy ? fy : 1 - fy) * (oz ? fz : 1 - fz);
        acc += f(x0 + ox, y0 + oy, z0 + oz) * w;
    }
    return acc;
}

} // namespace

ScalarVolume gaussian_smooth(const ScalarVolume &vol, double sigma) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("reference::gaussian_smooth: sigma must be >= 0");
    if (sigma == 0.0) return vol;
    const auto k = kernel_1d(sigma);
    const int r = static_cast<int>(k.size() / 2);
    const auto &d = vol.dims();
    ScalarVolume out(vol.geometry());
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                double acc = 0.0;
                for (int c = -r; c <= r; ++c)
                    for (int b = -r; b <= r; ++b)
                        for (int a = -r; a <= r; ++a)
                            acc += k[a + r] * k[b + r] * k[c + r] * vol(clampi(x + a, d[0]), clampi(y + b, d[1]), clampi(z + c, d[2]));
                out(x, y, z) = acc;
            }
    return out;
}

ScalarVolume warp(const ScalarVolume &vol, const VectorField &d) {
    if (d.kind() != FieldKind::displacement) throw std::invalid_argument("reference::warp: need a displacement field");
    if (vol.dims() != d.dims()) throw std::invalid_argument("reference::warp: geometry mismatch");
    ScalarVolume out(vol.geometry());
    const auto &n = vol.dims();
    for (int z = 0; z < n[2]; ++z)
        for (int y = 0; y < n[1]; ++y)
            for (int x = 0; x < n[0]; ++x) {
                const Vec3 u = d(x, y, z);
                out(x, y, z) = lerp_sample(vol, x + u.x, y + u.y, z + u.z);
            }
    return out;
}

JacobianMap jacobian_determinant(const VectorField &d) {
    const auto &n = d.dims();
    if (std::min({n[0], n[1], n[2]}) < 3) throw std::invalid_argument("reference::jacobian_determinant: dims must be >= 3");
    JacobianMap out(d.geometry());
    for (int z = 0; z < n[2]; ++z)
        for (int y = 0; y < n[1]; ++y)
            for (int x = 0; x < n[0]; ++x) {
                const int cx = std::clamp(x, 1, n[0] - 2), cy = std::clamp(y, 1, n[1] - 2), cz = std::clamp(z, 1, n[2] - 2);
                double m[3][3];
                const Vec3 gx = (d(cx + 1, cy, cz) - d(cx - 1, cy, cz)) * 0.5;
                const Vec3 gy = (d(cx, cy + 1, cz) - d(cx, cy - 1, cz)) * 0.5;
                const Vec3 gz = (d(cx, cy, cz + 1) - d(cx, cy, cz - 1)) * 0.5;
                const Vec3 cols[3] = {gx, gy, gz};
                for (int c = 0; c < 3; ++c) {
                    m[0][c] = cols[c].x + (c == 0);
                    m[1][c] = cols[c].y + (c == 1);
                    m[2][c] = cols[c].z + (c == 2);
                }
                // Rule of Sarrus.
                out(x, y, z) = m[0][0] * m[1][1] * m[2][2] + m[0][1] * m[1][2] * m[2][0] + m[0][2] * m[1][0] * m[2][1] -
                               m[0][2] * m[1][1] * m[2][0] - m[0][0] * m[1][2] * m[2][1] - m[0][1] * m[1][0] * m[2][2];
            }
    return out;
}

VectorField exp_velocity(const VectorField &v, int steps) {
    if (steps < 1) throw std::invalid_argument("reference::exp_velocity: steps must be >= 1");
    const auto &n = v.dims();
    const double s = std::ldexp(1.0, -steps);
    VectorField u(v.geometry(), FieldKind::displacement);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = v[i] * s;
    for (int k = 0; k < steps; ++k) {
        VectorField next(v.geometry(), FieldKind::displacement);
        for (int z = 0; z < n[2]; ++z)
            for (int y = 0; y < n[1]; ++y)
                for (int x = 0; x < n[0]; ++x) {
                    const Vec3 a = u(x, y, z);
                    next(x, y, z) = a + lerp_vec(u, x + a.x, y + a.y, z + a.z);
                }
        u = std::move(next);
    }
    return u;
}

} // namespace lesionrev::reference
