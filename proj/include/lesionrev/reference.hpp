#pragma once

// Serial reference implementations of the hot grid kernels. They are written
// directly from the definitions, without OpenMP, and serve as test oracles and
// as the baseline for the kernel benchmark.

#include "lesionrev/field.hpp"
#include "lesionrev/volume.hpp"

namespace lesionrev::reference {

// Full (non-separable) Gaussian convolution with clamp-to-edge boundaries,
// kernel truncated at ceil(3 sigma) and renormalized per axis.
ScalarVolume gaussian_smooth(const ScalarVolume &vol, double sigma);

// Pull-back trilinear warp, clamped to the grid.
ScalarVolume warp(const ScalarVolume &vol, const VectorField &d);

// det(I + grad d), central differences with the face rule of the fast version.
JacobianMap jacobian_determinant(const VectorField &d);

// Scaling and squaring with a serial composition.
VectorField exp_velocity(const VectorField &v, int steps = 6);

} // namespace lesionrev::reference
