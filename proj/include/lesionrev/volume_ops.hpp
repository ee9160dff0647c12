#pragma once

#include <array>
#include <vector>

#include "lesionrev/volume.hpp"

namespace lesionrev {

// Trilinear interpolation at a continuous voxel coordinate, clamped to the grid.
// Throws std::invalid_argument for non-finite coordinates.
double sample_trilinear(const ScalarVolume &vol, const Vec3 &p);

// Central differences inside, one-sided at faces; intensity per voxel.
std::array<ScalarVolume, 3> spatial_gradient(const ScalarVolume &vol);
std::vector<Vec3> spatial_gradient_vectors(const ScalarVolume &vol);

// Separable Gaussian, kernel truncated at ceil(3 sigma) and renormalized.
ScalarVolume gaussian_smooth(const ScalarVolume &vol, double sigma);

// Divides by the centre of the most populated bin of the nonzero intensities.
ScalarVolume histogram_peak_normalize(const ScalarVolume &vol, int bins = 256);
double histogram_peak_value(const ScalarVolume &vol, int bins = 256);

// Mean over a (2r+1)^3 box truncated at the grid faces.
ScalarVolume box_mean(const ScalarVolume &vol, int radius);

// Pyramid helpers: smooth + decimate by two, and trilinear upsampling onto a finer grid.
ScalarVolume downsample2(const ScalarVolume &vol);
GridGeometry downsample2_geometry(const GridGeometry &g);

ScalarVolume to_scalar(const Mask &m);
Mask threshold_mask(const ScalarVolume &vol, double level);

double mean_of(const ScalarVolume &vol);
double mean_squared_difference(const ScalarVolume &a, const ScalarVolume &b);
bool all_finite(const ScalarVolume &vol);

} // namespace lesionrev
