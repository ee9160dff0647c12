#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lesionrev/field.hpp"
#include "lesionrev/registration.hpp"

namespace lesionrev {

// Nested star-shaped tissue shells. intensities[0] is the background;
// radius_fractions[k] scales the outer semi-axes for tissue shell k + 1.
struct PhantomSpec {
    GridGeometry geometry = default_geometry();
    std::vector<double> intensities{0.0, 0.35, 0.65, 1.0};
    std::vector<double> radius_fractions{1.0, 0.88, 0.74};
    // Outer semi-axes as a fraction of the grid extent along each axis.
    double extent_fraction = 0.42;
    double boundary_amplitude = 0.08;
    double boundary_frequency = 2.0;
    // Relative amplitude of the smooth intensity modulation inside tissue.
    double modulation = 0.04;
    double modulation_frequency = 3.0;
    std::uint64_t seed = 1;

    int n_shells() const { return static_cast<int>(intensities.size()); }
    void validate() const;
};

nlohmann::json to_json(const PhantomSpec &s);
PhantomSpec phantom_spec_from_json(const nlohmann::json &j, PhantomSpec base = {});

struct Phantom {
    ScalarVolume image;
    LabelVolume labels;
};

// Labels: 0 background, k for tissue shell k (outer shells), and for the
// innermost shell n_shells - 1 + octant (8 parcels around the centre).
Phantom make_phantom(const PhantomSpec &spec);

// Labels of the innermost shell parcels.
std::vector<std::int32_t> innermost_labels(const PhantomSpec &spec);
// Every nonzero label the phantom can produce.
std::vector<std::int32_t> roi_labels(const PhantomSpec &spec);

inline constexpr std::int32_t kLesionLabel = 99;

struct SubjectParams {
    double max_velocity = 2.0;
    double frequency = 1.5;
    double noise_sigma = 0.02;
    int exp_steps = 6;
    // Curl of a Perlin vector potential instead of a plain Perlin field.
    bool divergence_free = true;
};

nlohmann::json to_json(const SubjectParams &p);
SubjectParams subject_params_from_json(const nlohmann::json &j, SubjectParams base = {});

struct Subject {
    ScalarVolume image;
    LabelVolume labels;
    VectorField velocity;
    VectorField displacement;
};

// Warps the atlas by exp(v) for a smooth random v (max norm <= max_velocity),
// adds Gaussian noise inside the brain. Intensities stay on the atlas scale.
Subject make_subject(const Phantom &atlas, std::uint64_t seed, const SubjectParams &params = {});

struct SynthParams {
    Vec3 p_lesion;
    double core_radius = 3.0;
    double s_final = 6.5;
    double severity = 1.0;
    double contrast = 0.5;
    std::uint64_t seed = 0;
    double shape_amplitude = 0.25;
    double shape_frequency = 1.5;
    int ring_width = 2;
    double blend_sigma = 1.0;
    double window = 10.0;
    int margin = 3;
    RegParams reg = mask_registration_defaults();

    void validate() const;
};

nlohmann::json to_json(const SynthParams &p);
SynthParams synth_params_from_json(const nlohmann::json &j, SynthParams base = {});

// Raised when the final lesion cannot fit inside the brain at p_lesion.
class PlacementError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SynthCase {
    ScalarVolume healthy;
    ScalarVolume core_image;
    ScalarVolume lesioned;
    Mask core_mask;
    Mask final_mask;
    VectorField gt_velocity;
    VectorField gt_displacement;
    SynthParams params;
    // Dice(warp(final, exp(v_raw)), core) from the mask registration.
    double registration_dice = std::numeric_limits<double>::quiet_NaN();
    // Dice of the expanded core against final_mask.
    double expansion_dice = std::numeric_limits<double>::quiet_NaN();
};

// Smooth falloff applied to the mask-registration velocity: 1 inside the
// mask, cosine taper over `width` voxels of signed distance, 0 beyond.
ScalarVolume falloff_window(const Mask &final_mask, double width);

// Lesion forward model. lesioned = warp(core_image, exp(-gt_velocity)), so
// warp(lesioned, gt_displacement) reproduces core_image. When `placement` is
// given, p_lesion must lie inside it.
SynthCase synthesize_lesion(const ScalarVolume &healthy, const SynthParams &params, const Mask *placement = nullptr);

// Same forward model with a caller-supplied raw velocity (skips the mask
// registration); used for ablations.
SynthCase synthesize_lesion_with_velocity(const ScalarVolume &healthy, const SynthParams &params, const Mask &core_mask,
                                          const Mask &final_mask, const VectorField &v_raw);

// Core and final lesion masks of a synthesis run, before any deformation.
std::pair<Mask, Mask> lesion_masks(const GridGeometry &g, const SynthParams &params);

// Mean |divergence(v)| over `region`.
double mean_abs_divergence(const VectorField &v, const Mask &region);

class NormativeJacobianPool {
public:
    NormativeJacobianPool() = default;
    NormativeJacobianPool(std::vector<float> samples, nlohmann::json provenance);

    std::size_t size() const { return samples_.size(); }
    const std::vector<float> &samples() const { return samples_; }
    const nlohmann::json &provenance() const { return provenance_; }
    // Linear interpolation between order statistics, p in [0, 100].
    double percentile(double p) const;
    // Cached table for p = 1..99.
    const std::array<double, 99> &table() const { return table_; }

    // Writes pool.bin (float32, little endian, sorted) and pool.json.
    void save(const std::filesystem::path &dir) const;
    static NormativeJacobianPool load(const std::filesystem::path &dir);

private:
    std::vector<float> samples_;
    std::array<double, 99> table_{};
    nlohmann::json provenance_ = nlohmann::json::object();
};

// Interior Jacobian determinants (faces excluded) in x-fastest order,
// optionally only where `within` is set.
std::vector<float> interior_jacobians(const VectorField &d, const Mask *within = nullptr);

// Which voxels of each registration enter the pool: every interior grid
// voxel, or interior voxels inside the subject's brain (intensity > 0).
enum class PoolRegion { grid_interior, brain };

const char *to_string(PoolRegion r);
PoolRegion pool_region_from_string(const std::string &s);

// Registers atlas (moving) onto every subject (fixed) and pools the interior
// Jacobian determinants.
NormativeJacobianPool build_normative_pool(const ScalarVolume &atlas, const std::vector<ScalarVolume> &subjects, const RegParams &reg,
                                           const nlohmann::json &provenance = nlohmann::json::object(),
                                           PoolRegion region = PoolRegion::brain);

} // namespace lesionrev
