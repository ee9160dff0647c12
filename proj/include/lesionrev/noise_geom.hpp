#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"
#include "lesionrev/field.hpp"
#include "lesionrev/volume.hpp"

namespace lesionrev {

// Improved Perlin noise: quintic fade, 12 cube-edge gradients, permutation
// shuffled from the seed.
class PerlinTable {
public:
    explicit PerlinTable(std::uint64_t seed);
    std::uint64_t seed() const { return seed_; }
    const std::array<int, 256> &permutation() const { return perm_; }
    int hash(int i) const { return perm2_[static_cast<std::size_t>(i & 511)]; }

private:
    std::uint64_t seed_;
    std::array<int, 256> perm_{};
    std::array<int, 512> perm2_{};
};

// The 12 gradient directions, indexed by hash % 12.
const std::array<Vec3, 12> &perlin_gradients();

double perlin3(const PerlinTable &table, const Vec3 &p, double frequency);

struct BlobMesh {
    Vec3 center;
    double base_radius = 1.0;
    std::vector<Vec3> directions; // unit vectors
    std::vector<double> radii;    // one per direction
    std::vector<std::array<int, 3>> faces;
    // Faces of each subdivision level; face f of level k has children
    // 4f..4f+3 in level k+1. The last level equals `faces`.
    std::vector<std::vector<std::array<int, 3>>> levels;

    Vec3 vertex(std::size_t i) const { return center + directions[i] * radii[i]; }
    nlohmann::json to_json() const;
};

// Icosphere with subdivisions in 0..5; vertex count 10*4^n + 2.
BlobMesh make_icosphere(const Vec3 &center, double radius, int subdivisions);

BlobMesh make_blob_mesh(const Vec3 &center, double base_radius, double amplitude, double frequency, std::uint64_t seed,
                        int subdivisions = 3);

// Radius of the star-shaped surface along unit direction `dir`.
double blob_radius(const BlobMesh &mesh, const Vec3 &dir);

// Voxel of mesh vertex i, quantized toward the centre voxel: round(center) +
// trunc(vertex - round(center)) per axis.
std::array<int, 3> vertex_voxel(const BlobMesh &mesh, std::size_t i);

// Voxels whose centre passes the radial test, plus every vertex voxel.
Mask voxelize_blob(const BlobMesh &mesh, const GridGeometry &geom);

// Exact Euclidean distance (voxel units) from each voxel to the nearest nonzero
// voxel of `features`; infinity when there is none.
ScalarVolume distance_transform(const Mask &features);

// Positive outside: distance to the nearest inside voxel. Inside: minus the
// distance to the nearest outside voxel, shifted by one so the boundary layers
// sit at -0 and +1.
ScalarVolume signed_distance(const Mask &mask);

struct LesionMaskParams {
    double amplitude = 0.3;
    double frequency = 1.5;
    int subdivisions = 3;
    int margin = 3;
    int max_attempts = 100;
};

// Rejection-samples blobs until the volume is in [min_volume, max_volume] and
// the blob keeps `margin` voxels from the outside of `brain` (grid faces when
// no brain mask is given).
Mask random_lesion_mask(const GridGeometry &geom, double min_volume, double max_volume, std::uint64_t seed,
                        const std::optional<Mask> &brain = std::nullopt, const LesionMaskParams &params = {});

// Smooth random field from three Perlin channels. `frequency` is in cycles
// across the largest grid extent; the result is scaled to max norm `magnitude`.
VectorField perlin_vector_field(const GridGeometry &geom, FieldKind kind, double frequency, double magnitude, std::uint64_t seed);

// Sum of `bumps` Gaussian bumps (width `width` voxels, random vector weights,
// centres in the middle 40% of each axis), multiplied by a sin^2 taper that
// vanishes on the grid faces over `taper` voxels, then scaled to max norm
// `magnitude`.
VectorField random_smooth_velocity(const GridGeometry &geom, double magnitude, std::uint64_t seed, int bumps = 3,
                                   double width = 16.0, double taper = 24.0);

} // namespace lesionrev
