#include "lesionrev/reversal.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "lesionrev/json_util.hpp"
#include "lesionrev/morphology.hpp"
#include "lesionrev/volume_ops.hpp"

namespace lesionrev {

void SegmentationParams::validate() const {
    if (!(lower_pct > 0.0 && lower_pct < upper_pct && upper_pct < 100.0))
        throw std::invalid_argument("SegmentationParams: need 0 < lower_pct < upper_pct < 100");
    if (min_component < 0) throw std::invalid_argument("SegmentationParams: min_component must be >= 0");
    if (closing_radius < 0) throw std::invalid_argument("SegmentationParams: closing_radius must be >= 0");
}

nlohmann::json to_json(const SegmentationParams &p) {
    return {{"lower_pct", p.lower_pct}, {"upper_pct", p.upper_pct}, {"min_component", p.min_component}, {"closing_radius", p.closing_radius}};
}

SegmentationParams segmentation_params_from_json(const nlohmann::json &j, SegmentationParams base) {
    StrictObject o(j, "segmentation");
    o.get("lower_pct", base.lower_pct);
    o.get("upper_pct", base.upper_pct);
    o.get("min_component", base.min_component);
    o.get("closing_radius", base.closing_radius);
    o.finish();
    base.validate();
    return base;
}

Segmentation segment_lesion(const ScalarVolume &lesioned, const ScalarVolume &atlas, const NormativeJacobianPool &pool,
                            const SegmentationParams &params, const RegParams &reg) {
    params.validate();
    require_same_geometry(lesioned.geometry(), atlas.geometry(), "segment_lesion");
    if (pool.size() == 0) throw std::invalid_argument("segment_lesion: empty normative pool");
    Segmentation s;
    s.registration = register_images(atlas, lesioned, reg);
    s.displacement = s.registration.displacement;
    s.jacobian = jacobian_determinant(s.displacement);
    s.lower = pool.percentile(params.lower_pct);
    s.upper = pool.percentile(params.upper_pct);
    const auto &g = lesioned.geometry();
    s.raw = Mask(g);
    for (std::size_t i = 0; i < s.raw.size(); ++i)
        if (lesioned[i] > 0.0 && (s.jacobian[i] < s.lower || s.jacobian[i] > s.upper)) s.raw[i] = 1;
    Mask m = params.closing_radius > 0 ? closing(s.raw, params.closing_radius) : s.raw;
    s.mask = remove_small_components(m, static_cast<std::size_t>(params.min_component));
    s.empty = count_nonzero(s.mask) == 0;
    return s;
}

const char *to_string(InpainterKind k) { return k == InpainterKind::diffusion ? "diffusion" : "harmonic"; }

InpainterKind inpainter_kind_from_string(const std::string &s) {
    if (s == "diffusion") return InpainterKind::diffusion;
    if (s == "harmonic") return InpainterKind::harmonic;
    throw std::invalid_argument("unknown inpainter: " + s);
}

nlohmann::json to_json(const Inpainter &p) {
    return {{"kind", to_string(p.kind)},
            {"mode", to_string(p.diffusion.mode)},
            {"T", p.diffusion.schedule.T},
            {"seed", p.diffusion.seed},
            {"resample_jumps", p.diffusion.resample_jumps},
            {"denoiser_radius", p.denoiser_radius},
            {"harmonic_tol", p.harmonic_tol},
            {"harmonic_max_iter", p.harmonic_max_iter}};
}

Inpainter inpainter_from_json(const nlohmann::json &j, Inpainter base) {
    StrictObject o(j, "inpainter");
    std::string kind = to_string(base.kind), mode = to_string(base.diffusion.mode);
    int T = base.diffusion.schedule.T;
    o.get("kind", kind);
    o.get("mode", mode);
    o.get("T", T);
    o.get("seed", base.diffusion.seed);
    o.get("resample_jumps", base.diffusion.resample_jumps);
    o.get("denoiser_radius", base.denoiser_radius);
    o.get("harmonic_tol", base.harmonic_tol);
    o.get("harmonic_max_iter", base.harmonic_max_iter);
    o.finish();
    base.kind = inpainter_kind_from_string(kind);
    base.diffusion.mode = inpaint_mode_from_string(mode);
    if (T != base.diffusion.schedule.T) base.diffusion.schedule = default_schedule(T);
    if (base.denoiser_radius < 1) throw std::invalid_argument("inpainter.denoiser_radius must be >= 1");
    if (!(base.harmonic_tol > 0.0)) throw std::invalid_argument("inpainter.harmonic_tol must be > 0");
    if (base.harmonic_max_iter < 1) throw std::invalid_argument("inpainter.harmonic_max_iter must be >= 1");
    if (base.diffusion.resample_jumps < 0) throw std::invalid_argument("inpainter.resample_jumps must be >= 0");
    return base;
}

ScalarVolume run_inpainter(const ScalarVolume &vol, const Mask &m, const Inpainter &inpainter) {
    if (inpainter.kind == InpainterKind::harmonic) return harmonic_inpaint(vol, m, inpainter.harmonic_tol, inpainter.harmonic_max_iter);
    const auto den = neighborhood_denoiser(inpainter.denoiser_radius);
    return inpaint_sample(vol, m, *den, inpainter.diffusion);
}

CoreEstimate estimate_core(const ScalarVolume &lesioned, const Mask &lesion_mask, const Inpainter &inpainter, const RegParams &reg) {
    require_same_geometry(lesioned.geometry(), lesion_mask.geometry(), "estimate_core");
    if (count_nonzero(lesion_mask) == 0) throw std::invalid_argument("estimate_core: empty lesion mask");
    CoreEstimate c;
    c.inpainted = run_inpainter(lesioned, lesion_mask, inpainter);
    c.registration = register_images(lesioned, c.inpainted, reg);
    c.velocity_b = c.registration.velocity;
    c.core_image = warp(lesioned, c.registration.displacement);
    c.core_mask = warp(lesion_mask, c.registration.displacement, Interp::nearest);
    return c;
}

ScalarVolume estimate_healthy(const ScalarVolume &core_image, const Mask &core_mask, const Inpainter &inpainter) {
    require_same_geometry(core_image.geometry(), core_mask.geometry(), "estimate_healthy");
    if (count_nonzero(core_mask) == 0) return core_image;
    return run_inpainter(core_image, core_mask, inpainter);
}

nlohmann::json to_json(const ReversalConfig &c) {
    return {{"segmentation", to_json(c.segmentation)}, {"registration", to_json(c.registration)}, {"inpainter", to_json(c.inpainter)}};
}

namespace {

template <class F>
auto stage(const char *name, nlohmann::json &timing, F &&f) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
        auto out = f();
        timing[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    } catch (const std::invalid_argument &e) {
        throw std::invalid_argument(std::string(name) + ": " + e.what());
    } catch (const std::runtime_error &e) {
        throw std::runtime_error(std::string(name) + ": " + e.what());
    }
}

} // namespace

ReversalResult reverse_pipeline(const ScalarVolume &lesioned, const ScalarVolume &atlas, const NormativeJacobianPool &pool,
                                const ReversalConfig &cfg) {
    ReversalResult r;
    nlohmann::json timing = nlohmann::json::object();
    r.segmentation = stage("segmentation", timing, [&] { return segment_lesion(lesioned, atlas, pool, cfg.segmentation, cfg.registration); });
    r.lesion_mask = r.segmentation.mask;
    if (r.segmentation.empty) {
        // Nothing to reverse: the input is taken as healthy.
        r.inpainted_lesioned = lesioned;
        r.core_image = lesioned;
        r.core_mask = Mask(lesioned.geometry());
        r.velocity_b = VectorField(lesioned.geometry(), FieldKind::velocity);
        r.healthy_estimate = lesioned;
    } else {
        auto core = stage("core_estimation", timing, [&] { return estimate_core(lesioned, r.lesion_mask, cfg.inpainter, cfg.registration); });
        r.inpainted_lesioned = std::move(core.inpainted);
        r.core_image = std::move(core.core_image);
        r.core_mask = std::move(core.core_mask);
        r.velocity_b = std::move(core.velocity_b);
        r.healthy_estimate = stage("healthy_estimation", timing, [&] { return estimate_healthy(r.core_image, r.core_mask, cfg.inpainter); });
        r.metadata["core_registration"] = loss_trace_json(core.registration);
    }
    r.metadata["timing_seconds"] = timing;
    r.metadata["segmentation"] = {{"lower", r.segmentation.lower},
                                  {"upper", r.segmentation.upper},
                                  {"raw_voxels", count_nonzero(r.segmentation.raw)},
                                  {"voxels", count_nonzero(r.segmentation.mask)},
                                  {"empty", r.segmentation.empty}};
    r.metadata["config"] = to_json(cfg);
    return r;
}

namespace {

void overwrite_label(LabelVolume &labels, const Mask &m) {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (m[i]) labels[i] = kLesionLabel;
}

} // namespace

LabelResult label_groundtruth(const SynthCase &c, const ScalarVolume &atlas, const LabelVolume &atlas_labels, const RegParams &reg) {
    require_same_geometry(atlas.geometry(), atlas_labels.geometry(), "label_groundtruth");
    const RegResult r = register_images(atlas, c.healthy, reg);
    const LabelVolume healthy_labels = warp(atlas_labels, r.displacement);
    const VectorField growth = invert(c.gt_velocity, c.params.reg.exp_steps);
    LabelResult out{warp(healthy_labels, growth), compose(r.displacement, growth)};
    overwrite_label(out.labels, c.final_mask);
    return out;
}

LabelResult label_baseline(const ScalarVolume &lesioned, const ScalarVolume &atlas, const LabelVolume &atlas_labels, const RegParams &reg) {
    require_same_geometry(atlas.geometry(), atlas_labels.geometry(), "label_baseline");
    const RegResult r = register_images(atlas, lesioned, reg);
    return {warp(atlas_labels, r.displacement), r.displacement};
}

LabelResult label_proposed(const ReversalResult &res, const ScalarVolume &atlas, const LabelVolume &atlas_labels, const RegParams &reg) {
    require_same_geometry(atlas.geometry(), atlas_labels.geometry(), "label_proposed");
    const RegResult r = register_images(atlas, res.healthy_estimate, reg);
    const LabelVolume healthy_labels = warp(atlas_labels, r.displacement);
    const VectorField growth = invert(res.velocity_b, reg.exp_steps);
    LabelResult out{warp(healthy_labels, growth), compose(r.displacement, growth)};
    overwrite_label(out.labels, res.lesion_mask);
    return out;
}

} // namespace lesionrev
