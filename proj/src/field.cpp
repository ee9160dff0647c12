#include "lesionrev/field.hpp"

#include <algorithm>
#include <cmath>

#include "lesionrev/kernels.hpp"
#include "lesionrev/parallel.hpp"

namespace lesionrev {

const char *to_string(FieldKind kind) { return kind == FieldKind::velocity ? "velocity" : "displacement"; }

FieldKind field_kind_from_string(const std::string &s) {
    if (s == "velocity") return FieldKind::velocity;
    if (s == "displacement") return FieldKind::displacement;
    throw std::invalid_argument("unknown field kind: " + s);
}

VectorField::VectorField(GridGeometry geometry, FieldKind kind) : geometry_(std::move(geometry)), kind_(kind) {
    geometry_.validate();
    data_.assign(geometry_.voxel_count(), Vec3{});
}

VectorField::VectorField(GridGeometry geometry, FieldKind kind, std::vector<Vec3> data)
    : geometry_(std::move(geometry)), kind_(kind), data_(std::move(data)) {
    geometry_.validate();
    if (data_.size() != geometry_.voxel_count()) {
        throw std::invalid_argument("vector field length does not match grid dimensions");
    }
}

Vec3 VectorField::sample(const Vec3 &p) const {
    return kernels::trilinear(data_.data(), geometry_.dims, p.x, p.y, p.z);
}

VectorField scaled(const VectorField &f, double s) {
    std::vector<Vec3> out(f.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f[i] * s;
    return VectorField(f.geometry(), f.kind(), std::move(out));
}

VectorField negated(const VectorField &f) { return scaled(f, -1.0); }

VectorField with_kind(const VectorField &f, FieldKind kind) { return VectorField(f.geometry(), kind, f.values()); }

double max_norm(const VectorField &f) {
    double m = 0.0;
    for (const auto &v : f.data()) m = std::max(m, norm(v));
    return m;
}

bool all_finite(const VectorField &f) {
    return std::all_of(f.data().begin(), f.data().end(), [](const Vec3 &v) { return is_finite(v); });
}

VectorField compose(const VectorField &d1, const VectorField &d2) {
    require_same_geometry(d1.geometry(), d2.geometry(), "compose");
    const auto &g = d1.geometry();
    std::vector<Vec3> out(d1.size());
#pragma omp parallel for schedule(static)
    for (int z = 0; z < g.dims[2]; ++z) {
        for (int y = 0; y < g.dims[1]; ++y) {
            for (int x = 0; x < g.dims[0]; ++x) {
                const std::size_t i = g.index(x, y, z);
                const Vec3 u = d2[i];
                out[i] = u + d1.sample({x + u.x, y + u.y, z + u.z});
            }
        }
    }
    return VectorField(g, FieldKind::displacement, std::move(out));
}

VectorField exp_velocity(const VectorField &v, int steps) {
    if (steps < 1) throw std::invalid_argument("exp_velocity: steps must be >= 1");
    if (!all_finite(v)) throw std::invalid_argument("exp_velocity: non-finite velocity");
    VectorField u = with_kind(scaled(v, std::ldexp(1.0, -steps)), FieldKind::displacement);
    for (int s = 0; s < steps; ++s) u = compose(u, u);
    return u;
}

VectorField invert(const VectorField &f, int exp_steps) {
    if (f.kind() == FieldKind::velocity) return exp_velocity(negated(f), exp_steps);
    const auto &g = f.geometry();
    VectorField w(g, FieldKind::displacement);
    double last_update = INFINITY;
    int growing = 0;
    bool converged = false;
    for (int it = 0; it < 50 && !converged; ++it) {
        VectorField next(g, FieldKind::displacement);
#pragma omp parallel for schedule(static)
        for (int z = 0; z < g.dims[2]; ++z) {
            for (int y = 0; y < g.dims[1]; ++y) {
                for (int x = 0; x < g.dims[0]; ++x) {
                    const std::size_t i = g.index(x, y, z);
                    next[i] = -f.sample({x + w[i].x, y + w[i].y, z + w[i].z});
                }
            }
        }
        double update = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) update = std::max(update, norm(next[i] - w[i]));
        w = std::move(next);
        converged = update < 1e-3;
        growing = update > last_update ? growing + 1 : 0;
        if (growing >= 5) throw std::runtime_error("invert: fixed-point iteration diverged");
        last_update = update;
    }
    if (!converged) throw std::runtime_error("invert: fixed-point iteration did not converge in 50 iterations");
    return w;
}

namespace {

template <class T>
Volume<T> warp_nearest(const Volume<T> &vol, const VectorField &d) {
    require_same_geometry(vol.geometry(), d.geometry(), "warp");
    const auto &g = vol.geometry();
    Volume<T> out(g);
#pragma omp parallel for schedule(static)
    for (int z = 0; z < g.dims[2]; ++z) {
        for (int y = 0; y < g.dims[1]; ++y) {
            for (int x = 0; x < g.dims[0]; ++x) {
                const std::size_t i = g.index(x, y, z);
                const Vec3 u = d[i];
                const int sx = std::clamp(static_cast<int>(std::floor(x + u.x + 0.5)), 0, g.dims[0] - 1);
                const int sy = std::clamp(static_cast<int>(std::floor(y + u.y + 0.5)), 0, g.dims[1] - 1);
                const int sz = std::clamp(static_cast<int>(std::floor(z + u.z + 0.5)), 0, g.dims[2] - 1);
                out[i] = vol(sx, sy, sz);
            }
        }
    }
    return out;
}

void require_displacement(const VectorField &d) {
    if (d.kind() != FieldKind::displacement) throw std::invalid_argument("warp: field must be a displacement");
    if (!all_finite(d)) throw std::invalid_argument("warp: non-finite displacement");
}

} // namespace

ScalarVolume warp(const ScalarVolume &vol, const VectorField &d, Interp interp) {
    require_displacement(d);
    if (interp == Interp::nearest) return warp_nearest(vol, d);
    require_same_geometry(vol.geometry(), d.geometry(), "warp");
    const auto &g = vol.geometry();
    ScalarVolume out(g);
    const double *src = vol.data().data();
#pragma omp parallel for schedule(static)
    for (int z = 0; z < g.dims[2]; ++z) {
        for (int y = 0; y < g.dims[1]; ++y) {
            for (int x = 0; x < g.dims[0]; ++x) {
                const std::size_t i = g.index(x, y, z);
                const Vec3 u = d[i];
                out[i] = kernels::trilinear(src, g.dims, x + u.x, y + u.y, z + u.z);
            }
        }
    }
    return out;
}

LabelVolume warp(const LabelVolume &vol, const VectorField &d, Interp interp) {
    if (interp != Interp::nearest) throw std::invalid_argument("warp: labels require nearest-neighbour interpolation");
    require_displacement(d);
    return warp_nearest(vol, d);
}

Mask warp(const Mask &vol, const VectorField &d, Interp interp) {
    if (interp != Interp::nearest) throw std::invalid_argument("warp: masks require nearest-neighbour interpolation");
    require_displacement(d);
    return warp_nearest(vol, d);
}

JacobianMap jacobian_determinant(const VectorField &d) {
    const auto &g = d.geometry();
    if (g.min_dim() < 3) throw std::invalid_argument("jacobian_determinant: dims must be >= 3");
    JacobianMap out(g);
    const std::size_t sy = static_cast<std::size_t>(g.dims[0]);
    const std::size_t sz = sy * static_cast<std::size_t>(g.dims[1]);
#pragma omp parallel for schedule(static)
    for (int z = 0; z < g.dims[2]; ++z) {
        const int cz = std::clamp(z, 1, g.dims[2] - 2);
        for (int y = 0; y < g.dims[1]; ++y) {
            const int cy = std::clamp(y, 1, g.dims[1] - 2);
            for (int x = 0; x < g.dims[0]; ++x) {
                const int cx = std::clamp(x, 1, g.dims[0] - 2);
                const std::size_t c = g.index(cx, cy, cz);
                const Vec3 dx = (d[c + 1] - d[c - 1]) * 0.5;
                const Vec3 dy = (d[c + sy] - d[c - sy]) * 0.5;
                const Vec3 dz = (d[c + sz] - d[c - sz]) * 0.5;
                // rows: components, columns: derivative axis
                const double a00 = 1 + dx.x, a01 = dy.x, a02 = dz.x;
                const double a10 = dx.y, a11 = 1 + dy.y, a12 = dz.y;
                const double a20 = dx.z, a21 = dy.z, a22 = 1 + dz.z;
                out[g.index(x, y, z)] = a00 * (a11 * a22 - a12 * a21) - a01 * (a10 * a22 - a12 * a20) + a02 * (a10 * a21 - a11 * a20);
            }
        }
    }
    return out;
}

namespace {

// The six bending stencils: three pure second differences and three mixed
// central differences. Each is symmetric, so its adjoint is the same stencil.
struct Stencils {
    std::size_t s[3];
};

inline Vec3 second_diff(const Vec3 *f, std::size_t i, std::size_t s) { return f[i + s] - f[i] * 2.0 + f[i - s]; }

inline Vec3 mixed_diff(const Vec3 *f, std::size_t i, std::size_t a, std::size_t b) {
    return (f[i + a + b] - f[i + a - b] - f[i - a + b] + f[i - a - b]) * 0.25;
}

std::size_t interior_count(const GridGeometry &g) {
    return static_cast<std::size_t>(g.dims[0] - 2) * static_cast<std::size_t>(g.dims[1] - 2) * static_cast<std::size_t>(g.dims[2] - 2);
}

void require_bending_dims(const GridGeometry &g) {
    if (g.min_dim() < 4) throw std::invalid_argument("bending_energy: dims must be >= 4");
}

constexpr int kPairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};

} // namespace

double bending_energy(const VectorField &f) {
    const auto &g = f.geometry();
    require_bending_dims(g);
    const std::size_t st[3] = {1, static_cast<std::size_t>(g.dims[0]), static_cast<std::size_t>(g.dims[0]) * static_cast<std::size_t>(g.dims[1])};
    const Vec3 *p = f.data().data();
    const double total = ordered_sum(g.dims[2], [&](int z) {
        if (z == 0 || z == g.dims[2] - 1) return 0.0;
        double acc = 0.0;
        for (int y = 1; y < g.dims[1] - 1; ++y) {
            for (int x = 1; x < g.dims[0] - 1; ++x) {
                const std::size_t i = g.index(x, y, z);
                for (int a = 0; a < 3; ++a) {
                    const Vec3 s = second_diff(p, i, st[a]);
                    acc += dot(s, s);
                }
                for (const auto &pr : kPairs) {
                    const Vec3 m = mixed_diff(p, i, st[pr[0]], st[pr[1]]);
                    acc += 2.0 * dot(m, m);
                }
            }
        }
        return acc;
    });
    return total / static_cast<double>(interior_count(g));
}

std::vector<Vec3> bending_energy_gradient(const VectorField &f) {
    const auto &g = f.geometry();
    require_bending_dims(g);
    const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
    const std::size_t st[3] = {1, static_cast<std::size_t>(nx), static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny)};
    const Vec3 *p = f.data().data();
    const std::size_t n = f.size();
    // Residuals of each stencil, zero outside the interior.
    std::vector<std::vector<Vec3>> r(6, std::vector<Vec3>(n));
#pragma omp parallel for schedule(static)
    for (int z = 1; z < nz - 1; ++z) {
        for (int y = 1; y < ny - 1; ++y) {
            for (int x = 1; x < nx - 1; ++x) {
                const std::size_t i = g.index(x, y, z);
                for (int a = 0; a < 3; ++a) r[static_cast<std::size_t>(a)][i] = second_diff(p, i, st[a]);
                for (int k = 0; k < 3; ++k) r[static_cast<std::size_t>(3 + k)][i] = mixed_diff(p, i, st[kPairs[k][0]], st[kPairs[k][1]]);
            }
        }
    }
    const double scale = 2.0 / static_cast<double>(interior_count(g));
    std::vector<Vec3> out(n);
    auto rv = [&](int k, int x, int y, int z) -> Vec3 {
        if (x < 0 || y < 0 || z < 0 || x >= nx || y >= ny || z >= nz) return {};
        return r[static_cast<std::size_t>(k)][g.index(x, y, z)];
    };
#pragma omp parallel for schedule(static)
    for (int z = 0; z < nz; ++z) {
        for (int y = 0; y < ny; ++y) {
            for (int x = 0; x < nx; ++x) {
                const int c[3] = {x, y, z};
                Vec3 acc;
                for (int a = 0; a < 3; ++a) {
                    int lo[3] = {c[0], c[1], c[2]}, hi[3] = {c[0], c[1], c[2]};
                    --lo[a];
                    ++hi[a];
                    acc += rv(a, lo[0], lo[1], lo[2]) + rv(a, hi[0], hi[1], hi[2]) - rv(a, x, y, z) * 2.0;
                }
                for (int k = 0; k < 3; ++k) {
                    const int a = kPairs[k][0], b = kPairs[k][1];
                    Vec3 m;
                    for (int sa = -1; sa <= 1; sa += 2) {
                        for (int sb = -1; sb <= 1; sb += 2) {
                            int q[3] = {c[0], c[1], c[2]};
                            q[a] += sa;
                            q[b] += sb;
                            m += rv(3 + k, q[0], q[1], q[2]) * (0.25 * sa * sb);
                        }
                    }
                    acc += m * 2.0;
                }
                out[g.index(x, y, z)] = acc * scale;
            }
        }
    }
    return out;
}

namespace {

inline double central_div(const Vec3 *p, std::size_t i, std::size_t sy, std::size_t sz) {
    return 0.5 * ((p[i + 1].x - p[i - 1].x) + (p[i + sy].y - p[i - sy].y) + (p[i + sz].z - p[i - sz].z));
}

} // namespace

ScalarVolume divergence(const VectorField &f) {
    const auto &g = f.geometry();
    if (g.min_dim() < 3) throw std::invalid_argument("divergence: dims must be >= 3");
    const std::size_t sy = static_cast<std::size_t>(g.dims[0]), sz = sy * static_cast<std::size_t>(g.dims[1]);
    const Vec3 *p = f.data().data();
    ScalarVolume out(g);
#pragma omp parallel for schedule(static)
    for (int z = 0; z < g.dims[2]; ++z) {
        const int cz = std::clamp(z, 1, g.dims[2] - 2);
        for (int y = 0; y < g.dims[1]; ++y) {
            const int cy = std::clamp(y, 1, g.dims[1] - 2);
            for (int x = 0; x < g.dims[0]; ++x) {
                const int cx = std::clamp(x, 1, g.dims[0] - 2);
                out[g.index(x, y, z)] = central_div(p, g.index(cx, cy, cz), sy, sz);
            }
        }
    }
    return out;
}

double divergence_penalty(const VectorField &f) {
    const auto &g = f.geometry();
    if (g.min_dim() < 3) throw std::invalid_argument("divergence: dims must be >= 3");
    const std::size_t sy = static_cast<std::size_t>(g.dims[0]), sz = sy * static_cast<std::size_t>(g.dims[1]);
    const Vec3 *p = f.data().data();
    const double total = ordered_sum(g.dims[2], [&](int z) {
        if (z == 0 || z == g.dims[2] - 1) return 0.0;
        double acc = 0.0;
        for (int y = 1; y < g.dims[1] - 1; ++y) {
            for (int x = 1; x < g.dims[0] - 1; ++x) {
                const double dv = central_div(p, g.index(x, y, z), sy, sz);
                acc += dv * dv;
            }
        }
        return acc;
    });
    return total / static_cast<double>(interior_count(g));
}

std::vector<Vec3> divergence_penalty_gradient(const VectorField &f) {
    const auto &g = f.geometry();
    if (g.min_dim() < 3) throw std::invalid_argument("divergence: dims must be >= 3");
    const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
    const std::size_t sy = static_cast<std::size_t>(nx), sz = sy * static_cast<std::size_t>(ny);
    const Vec3 *p = f.data().data();
    std::vector<double> r(f.size(), 0.0);
#pragma omp parallel for schedule(static)
    for (int z = 1; z < nz - 1; ++z)
        for (int y = 1; y < ny - 1; ++y)
            for (int x = 1; x < nx - 1; ++x) r[g.index(x, y, z)] = central_div(p, g.index(x, y, z), sy, sz);
    auto rv = [&](int x, int y, int z) {
        if (x < 0 || y < 0 || z < 0 || x >= nx || y >= ny || z >= nz) return 0.0;
        return r[g.index(x, y, z)];
    };
    // Adjoint of the central difference is its negative.
    const double scale = 2.0 / static_cast<double>(interior_count(g));
    std::vector<Vec3> out(f.size());
#pragma omp parallel for schedule(static)
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x)
                out[g.index(x, y, z)] = Vec3{rv(x - 1, y, z) - rv(x + 1, y, z), rv(x, y - 1, z) - rv(x, y + 1, z),
                                             rv(x, y, z - 1) - rv(x, y, z + 1)} *
                                        (0.5 * scale);
    return out;
}

VectorField smooth_field(const VectorField &f, double sigma) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("smooth_field: sigma must be >= 0");
    std::vector<Vec3> data = f.values();
    kernels::gaussian_smooth_inplace(data, f.dims(), sigma);
    return VectorField(f.geometry(), f.kind(), std::move(data));
}

VectorField resample_field(const VectorField &f, const GridGeometry &target, double factor) {
    target.validate();
    const auto &src = f.geometry();
    const double rx = target.spacing[0] / src.spacing[0];
    const double ry = target.spacing[1] / src.spacing[1];
    const double rz = target.spacing[2] / src.spacing[2];
    VectorField out(target, f.kind());
#pragma omp parallel for schedule(static)
    for (int z = 0; z < target.dims[2]; ++z)
        for (int y = 0; y < target.dims[1]; ++y)
            for (int x = 0; x < target.dims[0]; ++x)
                out(x, y, z) = f.sample({x * rx, y * ry, z * rz}) * factor;
    return out;
}

} // namespace lesionrev
