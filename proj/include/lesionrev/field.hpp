#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lesionrev/volume.hpp"

namespace lesionrev {

enum class FieldKind { velocity, displacement };

const char *to_string(FieldKind kind);
FieldKind field_kind_from_string(const std::string &s);

// Dense 3-vector field in voxel units. The kind is fixed at construction.
class VectorField {
public:
    VectorField() = default;
    VectorField(GridGeometry geometry, FieldKind kind);
    VectorField(GridGeometry geometry, FieldKind kind, std::vector<Vec3> data);

    const GridGeometry &geometry() const { return geometry_; }
    const std::array<int, 3> &dims() const { return geometry_.dims; }
    FieldKind kind() const { return kind_; }
    std::size_t size() const { return data_.size(); }

    std::span<const Vec3> data() const { return data_; }
    std::span<Vec3> data() { return data_; }
    const std::vector<Vec3> &values() const { return data_; }

    const Vec3 &operator[](std::size_t i) const { return data_[i]; }
    Vec3 &operator[](std::size_t i) { return data_[i]; }
    const Vec3 &operator()(int x, int y, int z) const { return data_[geometry_.index(x, y, z)]; }
    Vec3 &operator()(int x, int y, int z) { return data_[geometry_.index(x, y, z)]; }

    // Clamped trilinear sample at a continuous voxel coordinate.
    Vec3 sample(const Vec3 &p) const;

    bool operator==(const VectorField &) const = default;

private:
    GridGeometry geometry_{};
    FieldKind kind_ = FieldKind::displacement;
    std::vector<Vec3> data_;
};

using JacobianMap = ScalarVolume;

enum class Interp { linear, nearest };

VectorField scaled(const VectorField &f, double s);
VectorField negated(const VectorField &f);
VectorField with_kind(const VectorField &f, FieldKind kind);
double max_norm(const VectorField &f);
bool all_finite(const VectorField &f);

// Scaling and squaring: u0 = v / 2^steps, then u <- u o u, `steps` times.
VectorField exp_velocity(const VectorField &v, int steps = 6);

// (d1 o d2)(x) = d2(x) + d1(x + d2(x)).
VectorField compose(const VectorField &d1, const VectorField &d2);

// Velocity: exp(-v). Displacement: fixed point w <- -u(x + w(x)).
VectorField invert(const VectorField &f, int exp_steps = 6);

// Pull-back warp: out(x) = vol(x + d(x)).
ScalarVolume warp(const ScalarVolume &vol, const VectorField &d, Interp interp = Interp::linear);
LabelVolume warp(const LabelVolume &vol, const VectorField &d, Interp interp = Interp::nearest);
Mask warp(const Mask &vol, const VectorField &d, Interp interp = Interp::nearest);

// det(I + grad d) by central differences; face voxels copy the nearest interior value.
JacobianMap jacobian_determinant(const VectorField &d);

// Thin-plate energy over interior voxels, mixed terms weighted 2, divided by
// the interior voxel count.
double bending_energy(const VectorField &f);
// Exact gradient of bending_energy with respect to every field component.
std::vector<Vec3> bending_energy_gradient(const VectorField &f);

// Central-difference divergence; face voxels copy the nearest interior value.
ScalarVolume divergence(const VectorField &f);
// Mean squared divergence over interior voxels, and its exact gradient.
double divergence_penalty(const VectorField &f);
std::vector<Vec3> divergence_penalty_gradient(const VectorField &f);

VectorField smooth_field(const VectorField &f, double sigma);

// Trilinear resampling onto `target`, with vectors multiplied by `factor`.
VectorField resample_field(const VectorField &f, const GridGeometry &target, double factor);

} // namespace lesionrev
