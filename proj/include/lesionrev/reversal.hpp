#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "lesionrev/diffusion.hpp"
#include "lesionrev/registration.hpp"
#include "lesionrev/synthesis.hpp"

namespace lesionrev {

struct SegmentationParams {
    double lower_pct = 5.0;
    double upper_pct = 95.0;
    int min_component = 20;
    int closing_radius = 1;

    void validate() const;
};

nlohmann::json to_json(const SegmentationParams &p);
SegmentationParams segmentation_params_from_json(const nlohmann::json &j, SegmentationParams base = {});

struct Segmentation {
    Mask mask;
    // Voxels flagged before morphology.
    Mask raw;
    JacobianMap jacobian;
    VectorField displacement; // atlas -> lesioned
    double lower = 0.0;
    double upper = 0.0;
    // Set when morphology leaves nothing.
    bool empty = false;
    RegResult registration;
};

// Registers atlas (moving) onto lesioned (fixed) and flags brain voxels whose
// Jacobian determinant falls outside the pool's [lower_pct, upper_pct] band.
Segmentation segment_lesion(const ScalarVolume &lesioned, const ScalarVolume &atlas, const NormativeJacobianPool &pool,
                            const SegmentationParams &params, const RegParams &reg);

enum class InpainterKind { diffusion, harmonic };

const char *to_string(InpainterKind k);
InpainterKind inpainter_kind_from_string(const std::string &s);

struct Inpainter {
    InpainterKind kind = InpainterKind::harmonic;
    InpaintConfig diffusion;
    int denoiser_radius = 2;
    double harmonic_tol = 1e-6;
    int harmonic_max_iter = 20000;
};

nlohmann::json to_json(const Inpainter &p);
Inpainter inpainter_from_json(const nlohmann::json &j, Inpainter base = {});

ScalarVolume run_inpainter(const ScalarVolume &vol, const Mask &m, const Inpainter &inpainter);

struct CoreEstimate {
    ScalarVolume inpainted;
    ScalarVolume core_image;
    Mask core_mask;
    VectorField velocity_b;
    RegResult registration;
};

// Inpaints the lesion, registers lesioned (moving) onto the inpainted image
// (fixed) and pulls the image and the lesion mask through exp(velocity_b).
CoreEstimate estimate_core(const ScalarVolume &lesioned, const Mask &lesion_mask, const Inpainter &inpainter, const RegParams &reg);

// Inpaints core_image at core_mask; an empty mask returns core_image.
ScalarVolume estimate_healthy(const ScalarVolume &core_image, const Mask &core_mask, const Inpainter &inpainter);

struct ReversalConfig {
    SegmentationParams segmentation;
    RegParams registration;
    Inpainter inpainter;
};

nlohmann::json to_json(const ReversalConfig &c);

struct ReversalResult {
    Segmentation segmentation;
    Mask lesion_mask;
    ScalarVolume inpainted_lesioned;
    ScalarVolume core_image;
    Mask core_mask;
    VectorField velocity_b;
    ScalarVolume healthy_estimate;
    nlohmann::json metadata = nlohmann::json::object();
};

// segment_lesion, estimate_core and estimate_healthy in sequence. Stage
// failures are rethrown with the stage name prefixed.
ReversalResult reverse_pipeline(const ScalarVolume &lesioned, const ScalarVolume &atlas, const NormativeJacobianPool &pool,
                                const ReversalConfig &cfg);

struct LabelResult {
    LabelVolume labels;
    // Accumulated pull-back field from lesioned space to atlas space.
    VectorField chain;
};

// Groundtruth: atlas -> healthy registration, labels pushed to lesioned
// space through exp(-gt_velocity), final_mask overwritten with the lesion label.
LabelResult label_groundtruth(const SynthCase &c, const ScalarVolume &atlas, const LabelVolume &atlas_labels, const RegParams &reg);

// Single atlas -> lesioned registration.
LabelResult label_baseline(const ScalarVolume &lesioned, const ScalarVolume &atlas, const LabelVolume &atlas_labels, const RegParams &reg);

// Atlas -> healthy estimate, pushed to lesioned space through exp(-velocity_b),
// estimated lesion mask overwritten with the lesion label.
LabelResult label_proposed(const ReversalResult &r, const ScalarVolume &atlas, const LabelVolume &atlas_labels, const RegParams &reg);

} // namespace lesionrev
