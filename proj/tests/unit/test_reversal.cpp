#include "doctest.h"

#include <string>

#include "lesionrev/metrics.hpp"
#include "lesionrev/morphology.hpp"
#include "lesionrev/reversal.hpp"
#include "lesionrev/volume_ops.hpp"
#include "test_util.hpp"

using namespace lesionrev;

namespace {

PhantomSpec small_spec() {
    PhantomSpec s;
    s.geometry.dims = {24, 24, 20};
    s.extent_fraction = 0.38;
    return s;
}

RegParams quick_reg() {
    RegParams r;
    r.iterations = 40;
    return r;
}

Mask ball(const GridGeometry &g, Vec3 c, double r) {
    Mask m(g);
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x) {
                const Vec3 d = Vec3(x, y, z) - c;
                m(x, y, z) = dot(d, d) <= r * r;
            }
    return m;
}

const Phantom &small_atlas() {
    static const Phantom p = make_phantom(small_spec());
    return p;
}

const NormativeJacobianPool &identity_pool() {
    static const NormativeJacobianPool pool =
        build_normative_pool(small_atlas().image, std::vector<ScalarVolume>(5, small_atlas().image), quick_reg());
    return pool;
}

} // namespace

TEST_CASE("segmentation params validation and json") {
    SegmentationParams p;
    CHECK_NOTHROW(p.validate());
    p.lower_pct = 96;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.min_component = -1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.upper_pct = 99;
    p.closing_radius = 2;
    const auto q = segmentation_params_from_json(to_json(p));
    CHECK(q.upper_pct == 99);
    CHECK(q.closing_radius == 2);
    CHECK_THROWS_AS(segmentation_params_from_json({{"upper", 90}}), std::invalid_argument);
    CHECK_THROWS_AS(segmentation_params_from_json({{"lower_pct", 50}, {"upper_pct", 40}}), std::invalid_argument);
}

TEST_CASE("inpainter json and kinds") {
    Inpainter p;
    p.kind = InpainterKind::diffusion;
    p.denoiser_radius = 3;
    p.diffusion.seed = 9;
    p.diffusion.mode = InpaintMode::repaint_noised_known;
    p.diffusion.resample_jumps = 2;
    const auto q = inpainter_from_json(to_json(p));
    CHECK(q.kind == InpainterKind::diffusion);
    CHECK(q.denoiser_radius == 3);
    CHECK(q.diffusion.seed == 9);
    CHECK(q.diffusion.resample_jumps == 2);
    CHECK(q.diffusion.schedule.T == p.diffusion.schedule.T);
    CHECK(inpainter_kind_from_string("harmonic") == InpainterKind::harmonic);
    CHECK_THROWS_AS(inpainter_kind_from_string("gan"), std::invalid_argument);
    CHECK_THROWS_AS(inpainter_from_json({{"kind", "harmonic"}, {"radius", 2}}), std::invalid_argument);
}

TEST_CASE("both inpainters keep known voxels") {
    const auto &atlas = small_atlas();
    const Mask m = ball(atlas.image.geometry(), {12, 12, 10}, 2.5);
    for (auto kind : {InpainterKind::harmonic, InpainterKind::diffusion}) {
        Inpainter p;
        p.kind = kind;
        const auto out = run_inpainter(atlas.image, m, p);
        for (std::size_t i = 0; i < m.size(); ++i)
            if (!m[i]) REQUIRE(out[i] == atlas.image[i]);
        CHECK(all_finite(out));
        CHECK(out == run_inpainter(atlas.image, m, p));
    }
}

TEST_CASE("atlas against itself yields an empty segmentation and a pass-through reversal") {
    const auto &atlas = small_atlas();
    const auto &pool = identity_pool();
    const auto s = segment_lesion(atlas.image, atlas.image, pool, {}, quick_reg());
    CHECK(s.empty);
    CHECK(count_nonzero(s.mask) == 0);
    CHECK(s.lower <= 1.0);
    CHECK(s.upper >= 1.0);

    ReversalConfig cfg;
    cfg.registration = quick_reg();
    const auto r = reverse_pipeline(atlas.image, atlas.image, pool, cfg);
    CHECK(r.segmentation.empty);
    CHECK(r.healthy_estimate == atlas.image);
    CHECK(r.core_image == atlas.image);
    CHECK(max_norm(r.velocity_b) == 0.0);
    CHECK(r.metadata.contains("timing_seconds"));
    CHECK(r.metadata["segmentation"]["empty"] == true);
    CHECK(r.metadata["config"]["registration"]["iterations"] == 40);
}

TEST_CASE("reversal stages report their name on failure") {
    const auto &atlas = small_atlas();
    const ScalarVolume other(make_geometry({24, 24, 19}), 0.5);
    try {
        reverse_pipeline(other, atlas.image, identity_pool(), {});
        FAIL("expected a geometry error");
    } catch (const std::invalid_argument &e) {
        CHECK(std::string(e.what()).find("segmentation") != std::string::npos);
    }
}

TEST_CASE("estimate_core and estimate_healthy contracts") {
    const auto &atlas = small_atlas();
    const auto &g = atlas.image.geometry();
    Inpainter inp;
    CHECK_THROWS_AS(estimate_core(atlas.image, Mask(g), inp, quick_reg()), std::invalid_argument);
    CHECK(estimate_healthy(atlas.image, Mask(g), inp) == atlas.image);

    // A dark ball with no deformation: the core estimate keeps the ball in
    // place and the healthy estimate fills it from the surroundings.
    const Mask m = ball(g, {12, 12, 10}, 2.5);
    ScalarVolume dark = atlas.image;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i]) dark[i] *= 0.3;
    const auto core = estimate_core(dark, m, inp, quick_reg());
    CHECK(core.velocity_b.kind() == FieldKind::velocity);
    CHECK(max_norm(exp_velocity(core.velocity_b)) <= 1.0);
    CHECK(dice(core.core_mask, m) >= 0.7);
    const auto healthy = estimate_healthy(core.core_image, core.core_mask, inp);
    for (std::size_t i = 0; i < m.size(); ++i)
        if (!core.core_mask[i]) REQUIRE(healthy[i] == core.core_image[i]);
    CHECK(nmse(healthy, atlas.image) < nmse(dark, atlas.image));
}

TEST_CASE("label transfer chains") {
    const auto &atlas = small_atlas();
    const auto &g = atlas.image.geometry();
    const auto base = label_baseline(atlas.image, atlas.image, atlas.labels, quick_reg());
    CHECK(base.chain.kind() == FieldKind::displacement);
    CHECK(max_norm(base.chain) <= 0.1);
    CHECK(mean_dice(base.labels, atlas.labels, label_set(atlas.labels)) >= 0.99);

    // Severity-zero case on the atlas: the groundtruth chain is the atlas
    // self-registration and the lesion label covers final_mask.
    SynthParams sp;
    sp.p_lesion = {12, 12, 10};
    sp.core_radius = 1.5;
    sp.s_final = 3.0;
    sp.severity = 0.0;
    sp.margin = 1;
    const auto sc = synthesize_lesion(atlas.image, sp);
    const auto gt = label_groundtruth(sc, atlas.image, atlas.labels, quick_reg());
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
        if (sc.final_mask[i])
            REQUIRE(gt.labels[i] == 99);
        else
            REQUIRE(gt.labels[i] == base.labels[i]);
    }

    ReversalResult r;
    r.healthy_estimate = atlas.image;
    r.velocity_b = VectorField(g, FieldKind::velocity);
    r.lesion_mask = ball(g, {12, 12, 10}, 2.0);
    const auto prop = label_proposed(r, atlas.image, atlas.labels, quick_reg());
    for (std::size_t i = 0; i < prop.labels.size(); ++i) {
        if (r.lesion_mask[i])
            REQUIRE(prop.labels[i] == 99);
        else
            REQUIRE(prop.labels[i] == base.labels[i]);
    }
    double diff = 0.0;
    for (std::size_t i = 0; i < prop.chain.size(); ++i) diff = std::max(diff, norm(prop.chain[i] - base.chain[i]));
    CHECK(diff <= 1e-12);
}
