#include "lesionrev/noise_geom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

#include "lesionrev/rng.hpp"

namespace lesionrev {

namespace {

constexpr std::uint64_t kPermStream = 0x5045524d;  // "PERM"
constexpr std::uint64_t kLesionStream = 0x4c45534e; // "LESN"
constexpr std::uint64_t kFieldStream = 0x46494c44;  // "FILD"

inline double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }
inline double lerp(double t, double a, double b) { return a + t * (b - a); }

} // namespace

PerlinTable::PerlinTable(std::uint64_t seed) : seed_(seed) {
    for (int i = 0; i < 256; ++i) perm_[static_cast<std::size_t>(i)] = i;
    CounterRng rng(seed, kPermStream);
    for (int i = 255; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm_[static_cast<std::size_t>(i)], perm_[j]);
    }
    for (std::size_t i = 0; i < 512; ++i) perm2_[i] = perm_[i & 255];
}

const std::array<Vec3, 12> &perlin_gradients() {
    static const std::array<Vec3, 12> g{Vec3{1, 1, 0}, Vec3{-1, 1, 0}, Vec3{1, -1, 0}, Vec3{-1, -1, 0},
                                        Vec3{1, 0, 1}, Vec3{-1, 0, 1}, Vec3{1, 0, -1}, Vec3{-1, 0, -1},
                                        Vec3{0, 1, 1}, Vec3{0, -1, 1}, Vec3{0, 1, -1}, Vec3{0, -1, -1}};
    return g;
}

double perlin3(const PerlinTable &table, const Vec3 &p, double frequency) {
    if (!(frequency > 0.0)) throw std::invalid_argument("perlin3: frequency must be > 0");
    const double x = p.x * frequency, y = p.y * frequency, z = p.z * frequency;
    const double fx = std::floor(x), fy = std::floor(y), fz = std::floor(z);
    const int X = static_cast<int>(static_cast<long long>(fx) & 255);
    const int Y = static_cast<int>(static_cast<long long>(fy) & 255);
    const int Z = static_cast<int>(static_cast<long long>(fz) & 255);
    const double xf = x - fx, yf = y - fy, zf = z - fz;
    const double u = fade(xf), v = fade(yf), w = fade(zf);
    const auto &G = perlin_gradients();
    auto grad = [&](int h, double dx, double dy, double dz) { return dot(G[static_cast<std::size_t>(h % 12)], Vec3{dx, dy, dz}); };
    const int A = table.hash(X) + Y, AA = table.hash(A) + Z, AB = table.hash(A + 1) + Z;
    const int B = table.hash(X + 1) + Y, BA = table.hash(B) + Z, BB = table.hash(B + 1) + Z;
    const double r = lerp(w,
                          lerp(v, lerp(u, grad(table.hash(AA), xf, yf, zf), grad(table.hash(BA), xf - 1, yf, zf)),
                               lerp(u, grad(table.hash(AB), xf, yf - 1, zf), grad(table.hash(BB), xf - 1, yf - 1, zf))),
                          lerp(v, lerp(u, grad(table.hash(AA + 1), xf, yf, zf - 1), grad(table.hash(BA + 1), xf - 1, yf, zf - 1)),
                               lerp(u, grad(table.hash(AB + 1), xf, yf - 1, zf - 1), grad(table.hash(BB + 1), xf - 1, yf - 1, zf - 1))));
    return std::clamp(r, -1.0, 1.0);
}

nlohmann::json BlobMesh::to_json() const {
    nlohmann::json j;
    j["center"] = {center.x, center.y, center.z};
    j["base_radius"] = base_radius;
    j["radii"] = radii;
    auto &dirs = j["directions"] = nlohmann::json::array();
    for (const auto &d : directions) dirs.push_back({d.x, d.y, d.z});
    auto &fs = j["faces"] = nlohmann::json::array();
    for (const auto &f : faces) fs.push_back({f[0], f[1], f[2]});
    return j;
}

BlobMesh make_icosphere(const Vec3 &center, double radius, int subdivisions) {
    if (subdivisions < 0 || subdivisions > 5) throw std::invalid_argument("icosphere: subdivisions must be in 0..5");
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                        {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto &p : v) p = p * (1.0 / norm(p));
    std::vector<std::array<int, 3>> f{{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                                      {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
                                      {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
    for (auto &tri : f) {
        const Vec3 &a = v[static_cast<std::size_t>(tri[0])], &b = v[static_cast<std::size_t>(tri[1])], &c = v[static_cast<std::size_t>(tri[2])];
        if (dot(cross(b - a, c - a), a) < 0) std::swap(tri[1], tri[2]);
    }
    BlobMesh mesh;
    mesh.levels.push_back(f);
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            const auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Vec3 m = v[static_cast<std::size_t>(a)] + v[static_cast<std::size_t>(b)];
            m = m * (1.0 / norm(m));
            v.push_back(m);
            const int idx = static_cast<int>(v.size()) - 1;
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(f.size() * 4);
        for (const auto &tri : f) {
            const int ab = mid(tri[0], tri[1]), bc = mid(tri[1], tri[2]), ca = mid(tri[2], tri[0]);
            next.push_back({tri[0], ab, ca});
            next.push_back({tri[1], bc, ab});
            next.push_back({tri[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        f = std::move(next);
        mesh.levels.push_back(f);
    }
    mesh.center = center;
    mesh.base_radius = radius;
    mesh.directions = std::move(v);
    mesh.radii.assign(mesh.directions.size(), radius);
    mesh.faces = f;
    return mesh;
}

BlobMesh make_blob_mesh(const Vec3 &center, double base_radius, double amplitude, double frequency, std::uint64_t seed,
                        int subdivisions) {
    if (!(base_radius >= 1.0)) throw std::invalid_argument("make_blob_mesh: base_radius must be >= 1 voxel");
    if (!(amplitude >= 0.0) || amplitude >= 1.0) throw std::invalid_argument("make_blob_mesh: amplitude must be in [0, 1)");
    if (subdivisions < 1 || subdivisions > 5) throw std::invalid_argument("make_blob_mesh: subdivisions must be in 1..5");
    BlobMesh mesh = make_icosphere(center, base_radius, subdivisions);
    if (amplitude > 0.0) {
        const PerlinTable table(seed);
        for (std::size_t i = 0; i < mesh.directions.size(); ++i) {
            mesh.radii[i] = base_radius * (1.0 + amplitude * perlin3(table, mesh.directions[i], frequency));
        }
    }
    return mesh;
}

namespace {

inline double containment(const BlobMesh &mesh, const std::array<int, 3> &tri, const Vec3 &dir) {
    const Vec3 &a = mesh.directions[static_cast<std::size_t>(tri[0])];
    const Vec3 &b = mesh.directions[static_cast<std::size_t>(tri[1])];
    const Vec3 &c = mesh.directions[static_cast<std::size_t>(tri[2])];
    return std::min({dot(cross(a, b), dir), dot(cross(b, c), dir), dot(cross(c, a), dir)});
}

} // namespace

double blob_radius(const BlobMesh &mesh, const Vec3 &dir) {
    if (mesh.levels.empty()) throw std::invalid_argument("blob_radius: mesh has no face hierarchy");
    // Descend the subdivision hierarchy to the face whose spherical triangle
    // contains dir (largest containment margin wins near shared edges).
    std::size_t best = 0;
    double best_score = -INFINITY;
    for (std::size_t f = 0; f < mesh.levels[0].size(); ++f) {
        const double s = containment(mesh, mesh.levels[0][f], dir);
        if (s > best_score) { best_score = s; best = f; }
    }
    for (std::size_t level = 1; level < mesh.levels.size(); ++level) {
        const std::size_t first = 4 * best;
        best_score = -INFINITY;
        for (std::size_t f = first; f < first + 4; ++f) {
            const double s = containment(mesh, mesh.levels[level][f], dir);
            if (s > best_score) { best_score = s; best = f; }
        }
    }
    const auto &tri = mesh.levels.back()[best];
    const Vec3 &a = mesh.directions[static_cast<std::size_t>(tri[0])];
    const Vec3 &b = mesh.directions[static_cast<std::size_t>(tri[1])];
    const Vec3 &c = mesh.directions[static_cast<std::size_t>(tri[2])];
    // Barycentric coordinates of the ray's hit point on the flat unit triangle.
    const Vec3 n = cross(b - a, c - a);
    const Vec3 q = dir * (dot(n, a) / dot(n, dir));
    const double nn = dot(n, n);
    double wa = std::max(0.0, dot(cross(b - q, c - q), n) / nn);
    double wb = std::max(0.0, dot(cross(c - q, a - q), n) / nn);
    double wc = std::max(0.0, dot(cross(a - q, b - q), n) / nn);
    const double ws = wa + wb + wc;
    wa /= ws;
    wb /= ws;
    wc /= ws;
    return wa * mesh.radii[static_cast<std::size_t>(tri[0])] + wb * mesh.radii[static_cast<std::size_t>(tri[1])] +
           wc * mesh.radii[static_cast<std::size_t>(tri[2])];
}

std::array<int, 3> vertex_voxel(const BlobMesh &mesh, std::size_t i) {
    const Vec3 p = mesh.vertex(i);
    std::array<int, 3> q{};
    for (int a = 0; a < 3; ++a) {
        const double anchor = std::round(mesh.center[a]);
        q[static_cast<std::size_t>(a)] = static_cast<int>(anchor + std::trunc(p[a] - anchor));
    }
    return q;
}

Mask voxelize_blob(const BlobMesh &mesh, const GridGeometry &geom) {
    geom.validate();
    const Vec3 c = mesh.center;
    for (int a = 0; a < 3; ++a) {
        if (!(c[a] >= 0.0 && c[a] <= geom.dims[static_cast<std::size_t>(a)] - 1)) {
            throw std::invalid_argument("voxelize_blob: mesh center outside grid");
        }
    }
    const double rmax = *std::max_element(mesh.radii.begin(), mesh.radii.end());
    const double rmin = *std::min_element(mesh.radii.begin(), mesh.radii.end());
    Mask out(geom);
    const int z0 = std::max(0, static_cast<int>(std::floor(c.z - rmax))), z1 = std::min(geom.dims[2] - 1, static_cast<int>(std::ceil(c.z + rmax)));
    const int y0 = std::max(0, static_cast<int>(std::floor(c.y - rmax))), y1 = std::min(geom.dims[1] - 1, static_cast<int>(std::ceil(c.y + rmax)));
    const int x0 = std::max(0, static_cast<int>(std::floor(c.x - rmax))), x1 = std::min(geom.dims[0] - 1, static_cast<int>(std::ceil(c.x + rmax)));
#pragma omp parallel for schedule(static)
    for (int z = z0; z <= z1; ++z) {
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const Vec3 d{x - c.x, y - c.y, z - c.z};
                const double r = norm(d);
                bool inside;
                if (r > rmax) inside = false;
                else if (r <= rmin) inside = true;
                else inside = r <= blob_radius(mesh, d * (1.0 / r));
                out(x, y, z) = inside ? 1 : 0;
            }
        }
    }
    for (std::size_t i = 0; i < mesh.directions.size(); ++i) {
        const auto q = vertex_voxel(mesh, i);
        if (geom.contains(q[0], q[1], q[2])) out(q[0], q[1], q[2]) = 1;
    }
    return out;
}

namespace {

constexpr double kFar = 1e20;

// Felzenszwalb-Huttenlocher lower envelope of parabolas, squared distances.
void edt_1d(const double *f, double *d, int n, std::vector<int> &v, std::vector<double> &zb) {
    auto intersect = [&](int q, int p) { return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p)); };
    std::size_t k = 0;
    v[0] = 0;
    zb[0] = -INFINITY;
    zb[1] = INFINITY;
    for (int q = 1; q < n; ++q) {
        double s = intersect(q, v[k]);
        while (s <= zb[k]) {
            --k;
            s = intersect(q, v[k]);
        }
        ++k;
        v[k] = q;
        zb[k] = s;
        zb[k + 1] = INFINITY;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (zb[k + 1] < q) ++k;
        const int p = v[k];
        d[q] = double(q - p) * (q - p) + f[p];
    }
}

void edt_axis(std::vector<double> &data, const std::array<int, 3> &dims, int axis) {
    const int nx = dims[0], ny = dims[1], nz = dims[2];
    const int n = dims[static_cast<std::size_t>(axis)];
    const std::size_t stride = axis == 0 ? 1 : (axis == 1 ? static_cast<std::size_t>(nx) : static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
    // lines indexed by the two other coordinates
    const int outer = axis == 2 ? ny : nz;
    const int inner = axis == 0 ? ny : nx;
#pragma omp parallel
    {
        std::vector<double> f(static_cast<std::size_t>(n)), d(static_cast<std::size_t>(n)), zb(static_cast<std::size_t>(n) + 1);
        std::vector<int> v(static_cast<std::size_t>(n));
#pragma omp for schedule(static)
        for (int o = 0; o < outer; ++o) {
            for (int in = 0; in < inner; ++in) {
                std::size_t base;
                if (axis == 0) base = static_cast<std::size_t>(nx) * (static_cast<std::size_t>(in) + static_cast<std::size_t>(ny) * static_cast<std::size_t>(o));
                else if (axis == 1) base = static_cast<std::size_t>(in) + static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(o);
                else base = static_cast<std::size_t>(in) + static_cast<std::size_t>(nx) * static_cast<std::size_t>(o);
                for (int q = 0; q < n; ++q) f[static_cast<std::size_t>(q)] = data[base + static_cast<std::size_t>(q) * stride];
                edt_1d(f.data(), d.data(), n, v, zb);
                for (int q = 0; q < n; ++q) data[base + static_cast<std::size_t>(q) * stride] = d[static_cast<std::size_t>(q)];
            }
        }
    }
}

} // namespace

ScalarVolume distance_transform(const Mask &features) {
    std::vector<double> d(features.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = features[i] ? 0.0 : kFar;
    for (int axis = 0; axis < 3; ++axis) edt_axis(d, features.dims(), axis);
    for (auto &x : d) x = x >= kFar * 0.5 ? INFINITY : std::sqrt(x);
    return ScalarVolume(features.geometry(), std::move(d));
}

ScalarVolume signed_distance(const Mask &mask) {
    const std::size_t n = count_nonzero(mask);
    if (n == 0) throw std::invalid_argument("signed_distance: mask is empty");
    if (n == mask.size()) throw std::invalid_argument("signed_distance: mask is full");
    Mask outside(mask.geometry());
    for (std::size_t i = 0; i < mask.size(); ++i) outside[i] = mask[i] ? 0 : 1;
    const auto to_inside = distance_transform(mask);
    const auto to_outside = distance_transform(outside);
    ScalarVolume out(mask.geometry());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = mask[i] ? -(to_outside[i] - 1.0) : to_inside[i];
    return out;
}

Mask random_lesion_mask(const GridGeometry &geom, double min_volume, double max_volume, std::uint64_t seed,
                        const std::optional<Mask> &brain, const LesionMaskParams &params) {
    geom.validate();
    if (!(min_volume >= 1.0) || !(max_volume >= min_volume)) {
        throw std::invalid_argument("random_lesion_mask: need 1 <= min_volume <= max_volume");
    }
    if (max_volume >= 0.2 * static_cast<double>(geom.voxel_count())) {
        throw std::invalid_argument("random_lesion_mask: max volume must be < 20% of the grid");
    }
    if (brain) require_same_geometry(brain->geometry(), geom, "random_lesion_mask");

    // distance from each voxel to the nearest non-brain location, counting the
    // layer just beyond the grid faces as non-brain
    ScalarVolume clearance(geom);
    {
        std::optional<ScalarVolume> to_outside;
        if (brain) {
            Mask outside(geom);
            for (std::size_t i = 0; i < outside.size(); ++i) outside[i] = (*brain)[i] ? 0 : 1;
            to_outside = distance_transform(outside);
        }
        for (int z = 0; z < geom.dims[2]; ++z)
            for (int y = 0; y < geom.dims[1]; ++y)
                for (int x = 0; x < geom.dims[0]; ++x) {
                    double c = std::min({x + 1, y + 1, z + 1, geom.dims[0] - x, geom.dims[1] - y, geom.dims[2] - z});
                    if (to_outside) c = std::min(c, (*to_outside)(x, y, z));
                    clearance(x, y, z) = c;
                }
    }

    CounterRng rng(seed, kLesionStream);
    for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
        const double volume = rng.uniform(min_volume, max_volume);
        const double radius = std::max(1.0, std::cbrt(3.0 * volume / (4.0 * std::numbers::pi)));
        const std::uint64_t blob_seed = rng.next_u64();
        std::vector<std::size_t> centers;
        for (std::size_t i = 0; i < clearance.size(); ++i) {
            if (clearance[i] >= params.margin + radius) centers.push_back(i);
        }
        if (centers.empty()) {
            rng.next_u64();
            continue;
        }
        const auto pick = centers[static_cast<std::size_t>(rng.below(centers.size()))];
        const auto c = geom.coords(pick);
        const auto mesh = make_blob_mesh({double(c[0]), double(c[1]), double(c[2])}, radius, params.amplitude, params.frequency,
                                         blob_seed, params.subdivisions);
        Mask m = voxelize_blob(mesh, geom);
        const auto count = static_cast<double>(count_nonzero(m));
        if (count < min_volume || count > max_volume) continue;
        bool contained = true;
        for (std::size_t i = 0; i < m.size() && contained; ++i) {
            if (m[i] && clearance[i] < params.margin) contained = false;
        }
        if (contained) return m;
    }
    throw std::runtime_error("random_lesion_mask: volume range infeasible");
}

VectorField perlin_vector_field(const GridGeometry &geom, FieldKind kind, double frequency, double magnitude, std::uint64_t seed) {
    geom.validate();
    if (!(frequency > 0.0)) throw std::invalid_argument("perlin_vector_field: frequency must be > 0");
    if (!(magnitude >= 0.0)) throw std::invalid_argument("perlin_vector_field: magnitude must be >= 0");
    const PerlinTable tx(hash_key(seed, kFieldStream, 0)), ty(hash_key(seed, kFieldStream, 1)), tz(hash_key(seed, kFieldStream, 2));
    const double extent = static_cast<double>(*std::max_element(geom.dims.begin(), geom.dims.end()) - 1);
    VectorField f(geom, kind);
#pragma omp parallel for schedule(static)
    for (int z = 0; z < geom.dims[2]; ++z)
        for (int y = 0; y < geom.dims[1]; ++y)
            for (int x = 0; x < geom.dims[0]; ++x) {
                const Vec3 p{x / extent, y / extent, z / extent};
                // channel offsets keep the three lattices from sharing zeros
                f(x, y, z) = {perlin3(tx, p + Vec3{0.31, 0.17, 0.43} * (1.0 / frequency), frequency),
                              perlin3(ty, p + Vec3{0.73, 0.59, 0.11} * (1.0 / frequency), frequency),
                              perlin3(tz, p + Vec3{0.23, 0.89, 0.67} * (1.0 / frequency), frequency)};
            }
    const double m = max_norm(f);
    return m > 0.0 ? scaled(f, magnitude / m) : f;
}

VectorField random_smooth_velocity(const GridGeometry &geom, double magnitude, std::uint64_t seed, int bumps, double width,
                                   double taper) {
    geom.validate();
    if (bumps < 1 || !(width > 0.0) || !(taper >= 0.0)) throw std::invalid_argument("random_smooth_velocity: bad parameters");
    CounterRng rng(seed, kFieldStream + 1);
    struct Bump {
        Vec3 centre, weight;
    };
    std::vector<Bump> list;
    for (int b = 0; b < bumps; ++b) {
        Bump bump;
        for (int a = 0; a < 3; ++a) {
            const double n = geom.dims[static_cast<std::size_t>(a)] - 1;
            bump.centre[a] = rng.uniform(0.3 * n, 0.7 * n);
        }
        bump.weight = {rng.normal(), rng.normal(), rng.normal()};
        list.push_back(bump);
    }
    VectorField v(geom, FieldKind::velocity);
#pragma omp parallel for schedule(static)
    for (int z = 0; z < geom.dims[2]; ++z)
        for (int y = 0; y < geom.dims[1]; ++y)
            for (int x = 0; x < geom.dims[0]; ++x) {
                const Vec3 p{double(x), double(y), double(z)};
                Vec3 acc;
                for (const auto &b : list) {
                    const Vec3 d = p - b.centre;
                    acc += b.weight * std::exp(-dot(d, d) / (2.0 * width * width));
                }
                const double m = std::min({x, y, z, geom.dims[0] - 1 - x, geom.dims[1] - 1 - y, geom.dims[2] - 1 - z});
                const double s = (taper > 0.0 && m < taper) ? std::sin(0.5 * std::numbers::pi * m / taper) : 1.0;
                v(x, y, z) = acc * (s * s);
            }
    const double m = max_norm(v);
    return m > 0.0 ? scaled(v, magnitude / m) : v;
}

} // namespace lesionrev
