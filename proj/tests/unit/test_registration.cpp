#include "doctest.h"

#include <cmath>

#include "lesionrev/noise_geom.hpp"
#include "lesionrev/registration.hpp"
#include "lesionrev/volume_ops.hpp"
#include "test_util.hpp"

using namespace lesionrev;

namespace {

Mask sphere(const GridGeometry &g, Vec3 c, double r) {
    Mask m(g);
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x) {
                const Vec3 d = Vec3(x, y, z) - c;
                if (dot(d, d) <= r * r) m(x, y, z) = 1;
            }
    return m;
}

// Smooth textured ellipsoid on a zero background.
ScalarVolume smooth_phantom(const GridGeometry &g) {
    ScalarVolume f(g);
    const Vec3 c{(g.dims[0] - 1) / 2.0, (g.dims[1] - 1) / 2.0, (g.dims[2] - 1) / 2.0};
    const Vec3 r{g.dims[0] / 3.0, g.dims[1] / 3.0, g.dims[2] / 3.0};
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x) {
                const Vec3 q{(x - c.x) / r.x, (y - c.y) / r.y, (z - c.z) / r.z};
                if (dot(q, q) < 1.0) f(x, y, z) = 0.6 + 0.4 * std::cos(3 * x / 8.0) * std::sin(y / 5.0) + 0.2 * std::sin(z / 4.0);
            }
    return gaussian_smooth(f, 1.0);
}

Vec3 interior_mean(const VectorField &d, double frac) {
    const auto &g = d.geometry();
    const Vec3 c{(g.dims[0] - 1) / 2.0, (g.dims[1] - 1) / 2.0, (g.dims[2] - 1) / 2.0};
    const Vec3 r{g.dims[0] / 3.0, g.dims[1] / 3.0, g.dims[2] / 3.0};
    Vec3 s;
    int n = 0;
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x) {
                const Vec3 q{(x - c.x) / r.x, (y - c.y) / r.y, (z - c.z) / r.z};
                if (dot(q, q) < frac) {
                    s += d(x, y, z);
                    ++n;
                }
            }
    return s * (1.0 / n);
}

VectorField constant(const GridGeometry &g, FieldKind k, Vec3 v) { return VectorField(g, k, std::vector<Vec3>(g.voxel_count(), v)); }

} // namespace

TEST_CASE("registration_loss examples") {
    const auto g = make_geometry({12, 12, 12});
    const auto img = smooth_phantom(g);
    RegParams p;
    const VectorField zero(g, FieldKind::velocity);
    const auto t0 = registration_loss(zero, img, img, p);
    CHECK(t0.total == 0.0);
    ScalarVolume shifted = img;
    for (auto &x : shifted.data()) x += 1.0;
    const auto t1 = registration_loss(zero, shifted, img, p);
    CHECK(t1.data == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t1.bend == 0.0);
    CHECK(t1.div == 0.0);

    p.lambda_div = 0.5;
    const auto v = random_smooth_velocity(g, 0.5, 4, 2, 4.0, 3.0);
    const auto t2 = registration_loss(v, img, img, p);
    CHECK(t2.data > 0.0);
    CHECK(t2.bend > 0.0);
    CHECK(t2.total == doctest::Approx(t2.data + t2.bend + 0.5 * t2.div));
    CHECK_THROWS_AS(registration_loss(zero, img, ScalarVolume(make_geometry({12, 12, 11})), p), std::invalid_argument);
}

TEST_CASE("RegParams validation and JSON") {
    RegParams p;
    CHECK_NOTHROW(p.validate());
    p.iterations = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.fluid_sigma = -1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.lambda_div = 0.25;
    p.mode = RegMode::sdf;
    const auto q = reg_params_from_json(to_json(p));
    CHECK(q.lambda_div == 0.25);
    CHECK(q.mode == RegMode::sdf);
    CHECK_THROWS_AS(reg_params_from_json({{"lamda_bend", 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(reg_params_from_json({{"iterations", "many"}}), std::invalid_argument);
    CHECK_THROWS_AS(reg_params_from_json({{"mode", "affine"}}), std::invalid_argument);
}

TEST_CASE("small-displacement data gradient matches finite differences") {
    const auto g = make_geometry({8, 8, 8});
    int checked = 0;
    for (std::uint64_t inst = 0; inst < 5; ++inst) {
        const auto moving = gaussian_smooth(testutil::random_volume(g, 100 + inst), 1.0);
        const auto fixed = gaussian_smooth(testutil::random_volume(g, 200 + inst), 1.0);
        VectorField u(g, FieldKind::displacement);
        CounterRng rng(inst, 9);
        for (auto &v : u.data()) v = {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
        const auto grad = loss_gradient_smalldisp(u, moving, fixed);
        for (int k = 0; k < 20; ++k) {
            // Interior voxels keep x + u away from the clamped faces.
            const int x = 1 + int(rng.below(6)), y = 1 + int(rng.below(6)), z = 1 + int(rng.below(6));
            const std::size_t i = g.index(x, y, z);
            for (int a = 0; a < 3; ++a) {
                const double h = 1e-6;
                VectorField up = u, um = u;
                up[i][a] += h;
                um[i][a] -= h;
                const double fd = (data_term_smalldisp(up, moving, fixed) - data_term_smalldisp(um, moving, fixed)) / (2 * h);
                const double an = grad[i][a];
                CHECK(std::abs(an - fd) <= 1e-3 * std::max(std::abs(fd), 1e-9));
                ++checked;
            }
        }
    }
    CHECK(checked == 300);

    const auto img = testutil::random_volume(g, 1);
    const auto zero_grad = loss_gradient_smalldisp(VectorField(g, FieldKind::displacement), img, img);
    CHECK(max_norm(zero_grad) == 0.0);
    const auto flat_grad = loss_gradient_smalldisp(constant(g, FieldKind::displacement, {0.2, 0.1, 0.3}), ScalarVolume(g, 0.4), img);
    CHECK(max_norm(flat_grad) == 0.0);
}

TEST_CASE("registering an image to itself leaves a near-zero field") {
    const auto g = make_geometry({24, 24, 20});
    const auto img = smooth_phantom(g);
    const auto r = register_images(img, img, RegParams{});
    CHECK(max_norm(r.displacement) <= 0.1);
    CHECK_FALSE(r.loss_trace.empty());
    CHECK(r.converged);
    CHECK(r.velocity.kind() == FieldKind::velocity);
    CHECK(r.displacement == exp_velocity(r.velocity, 6));
}

TEST_CASE("translation recovery, symmetry and diffeomorphism") {
    const auto g = make_geometry({32, 32, 28});
    const auto fixed = smooth_phantom(g);
    const auto moving = warp(fixed, constant(g, FieldKind::displacement, {2, 0, 0}));
    RegParams p;
    p.iterations = 150;
    const auto ab = register_images(moving, fixed, p);
    const Vec3 m1 = interior_mean(ab.displacement, 0.5);
    CHECK(norm(m1 - Vec3{-2, 0, 0}) <= 0.5);
    CHECK(min_interior_jacobian(ab.displacement) > 0.0);
    CHECK(ab.loss_trace.back().terms.data <= 0.2 * ab.loss_trace.front().terms.data);

    const auto ba = register_images(fixed, moving, p);
    const Vec3 m2 = interior_mean(ba.displacement, 0.5);
    CHECK(norm(m1 + m2) <= 0.5);
    CHECK(min_interior_jacobian(ba.displacement) > 0.0);

    // Per-level trend: last loss of every level is not above its first.
    for (const auto *r : {&ab, &ba}) {
        for (int level = 0; level < 2; ++level) {
            double first = NAN, last = NAN;
            for (const auto &rec : r->loss_trace)
                if (rec.level == level) {
                    if (std::isnan(first)) first = rec.terms.total;
                    last = rec.terms.total;
                }
            REQUIRE_FALSE(std::isnan(first));
            CHECK(last <= first);
        }
    }
}

TEST_CASE("registration is deterministic") {
    const auto g = make_geometry({16, 16, 16});
    const auto fixed = smooth_phantom(g);
    const auto moving = warp(fixed, exp_velocity(random_smooth_velocity(g, 1.0, 3, 2, 5.0, 4.0)));
    RegParams p;
    p.iterations = 30;
    const auto a = register_images(moving, fixed, p);
    const auto b = register_images(moving, fixed, p);
    CHECK(a.velocity == b.velocity);
    CHECK(loss_trace_json(a) == loss_trace_json(b));
}

TEST_CASE("register_masks on concentric spheres") {
    const auto g = make_geometry({32, 32, 32});
    for (const Vec3 c : {Vec3{15.5, 15.5, 15.5}, Vec3{16, 16, 16}}) {
        const Mask core = sphere(g, c, 3), fin = sphere(g, c, 6);
        const auto r = register_masks(core, fin, mask_registration_defaults());
        CHECK(r.mask_dice >= 0.9);
        CHECK(min_interior_jacobian(r.displacement) > 0.0);
        CHECK(jacobian_determinant(r.displacement)(int(c.x), int(c.y), int(c.z)) > 1.0);
    }
    const Mask m = sphere(g, {16, 16, 16}, 5);
    const auto same = register_masks(m, m, mask_registration_defaults());
    CHECK(max_norm(same.displacement) <= 0.1);
    CHECK(same.mask_dice == 1.0);
    CHECK_THROWS_AS(register_masks(Mask(g), m, mask_registration_defaults()), std::invalid_argument);
}
