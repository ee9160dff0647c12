#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "json.hpp"
#include "lesionrev/field.hpp"

namespace lesionrev {

enum class RegMode { intensity, sdf };

// Image gradient used by the demons force.
enum class DemonsForce { moving, fixed, symmetric };

struct RegParams {
    double lambda_bend = 1.0;
    double lambda_div = 0.0;
    int iterations = 300;
    double step = 0.5;
    double fluid_sigma = 1.5;
    double diffusion_sigma = 1.0;
    int pyramid_levels = 2;
    int exp_steps = 6;
    RegMode mode = RegMode::intensity;
    DemonsForce force = DemonsForce::symmetric;
    std::uint64_t seed = 0;
    // Explicit step sizes for the regularizer gradients, in per-voxel units.
    double bend_rate = 0.01;
    double div_rate = 0.1;
    // SDF mode: signed distances are clamped to [-sdf_clamp, sdf_clamp].
    double sdf_clamp = 4.0;

    void validate() const;
};

nlohmann::json to_json(const RegParams &p);
RegParams reg_params_from_json(const nlohmann::json &j, RegParams base = {});

struct LossTerms {
    double total = 0.0;
    double data = 0.0;
    double bend = 0.0;
    double div = 0.0;
};

struct LossRecord {
    int level = 0; // 0 = finest
    int iteration = 0;
    LossTerms terms;
};

struct RegResult {
    VectorField velocity;
    VectorField displacement;
    std::vector<LossRecord> loss_trace;
    bool converged = false;
    // register_masks only: Dice(warp(final, displacement), core)
    double mask_dice = std::numeric_limits<double>::quiet_NaN();
};

nlohmann::json loss_trace_json(const RegResult &r);

// data = MSE(warp(moving, exp(v)), fixed); bend = bending_energy(exp(v));
// div = mean squared divergence of v over interior voxels.
LossTerms registration_loss(const VectorField &v, const ScalarVolume &moving, const ScalarVolume &fixed, const RegParams &params);

// Log-domain demons with explicit regularizer gradients, coarse to fine.
RegResult register_images(const ScalarVolume &moving, const ScalarVolume &fixed, const RegParams &params);

// Registers sdf(final) (moving) onto sdf(core) (fixed): warp(final, exp(v))
// approximates core.
RegResult register_masks(const Mask &core, const Mask &final_mask, const RegParams &params);

// Defaults for register_masks: SDF mode, incompressibility on, lighter
// diffusion smoothing so the radial expansion profile survives.
RegParams mask_registration_defaults();

// Clamped signed distance used as the SDF-mode registration image.
ScalarVolume clamped_signed_distance(const Mask &m, double clamp);

// Gradient of the MSE data term with respect to a displacement u used
// directly (no exponential): 2 (warped - fixed) grad(moving)(x + u) / N.
VectorField loss_gradient_smalldisp(const VectorField &u, const ScalarVolume &moving, const ScalarVolume &fixed);
double data_term_smalldisp(const VectorField &u, const ScalarVolume &moving, const ScalarVolume &fixed);

double min_interior_jacobian(const VectorField &d);

} // namespace lesionrev
