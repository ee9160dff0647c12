// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lesionrev/diffusion.hpp"
#include "lesionrev/experiment.hpp"
#include "lesionrev/field.hpp"
#include "lesionrev/morphology.hpp"
#include "lesionrev/noise_geom.hpp"
#include "lesionrev/registration.hpp"
#include "lesionrev/rng.hpp"
#include "lesionrev/synthesis.hpp"
#include "lesionrev/volume_ops.hpp"

namespace fs = std::filesystem;
using namespace lesionrev;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Collects named sub-checks; the criterion passes when all of them hold.
struct Checks {
    std::vector<std::string> failed;
    std::ostringstream detail;

    void expect(bool ok, const std::string &what) {
        if (!ok) failed.push_back(what);
    }
    template <class T>
    void note(const std::string &key, T v) {
        detail << key << "=" << v << " ";
    }
};

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

VectorField constant_field(const GridGeometry &g, FieldKind k, Vec3 c) { return VectorField(g, k, std::vector<Vec3>(g.voxel_count(), c)); }

template <class F>
VectorField field_from(const GridGeometry &g, FieldKind kind, F f) {
    VectorField out(g, kind);
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x) out(x, y, z) = f(double(x), double(y), double(z));
    return out;
}

ScalarVolume random_volume(const GridGeometry &g, std::uint64_t seed) {
    ScalarVolume v(g);
    CounterRng rng(seed, 77);
    for (auto &x : v.data()) x = rng.uniform();
    return v;
}

// --- field algebra ---------------------------------------------------------

void field_algebra(Checks &c) {
    const auto t0 = Clock::now();
    const auto g = make_geometry({64, 64, 64});

    const auto id = exp_velocity(VectorField(g, FieldKind::velocity));
    c.expect(max_norm(id) == 0.0, "exp(0) != id");

    const auto tr = exp_velocity(constant_field(g, FieldKind::velocity, {3, -1.5, 0.25}));
    bool exact = true;
    for (const auto &u : tr.data()) exact &= u == Vec3{3, -1.5, 0.25};
    c.expect(exact, "constant velocity not an exact translation");

    // v(x) = A (x - c) with A = diag(0.1, 0, 0); the flow is (e^A - I)(x - c).
    const auto gl = make_geometry({32, 8, 8});
    const Vec3 ctr{15.5, 3.5, 3.5};
    const auto lin = exp_velocity(field_from(gl, FieldKind::velocity, [&](double x, double, double) { return Vec3{0.1 * (x - ctr.x), 0, 0}; }));
    const double k = std::exp(0.1) - 1.0;
    double lin_err = 0.0;
    for (int z = 0; z < 8; ++z)
        for (int y = 0; y < 8; ++y)
            for (int x = 6; x < 26; ++x) lin_err = std::max(lin_err, norm(lin(x, y, z) - Vec3{k * (x - ctr.x), 0, 0}));
    c.note("linear_err", fmt(lin_err));
    c.expect(lin_err <= 1e-3, "linear flow error " + fmt(lin_err));

    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto v = random_smooth_velocity(g, 5.0, seed);
        worst = std::max(worst, max_norm(compose(exp_velocity(v), exp_velocity(negated(v)))));
    }
    c.note("inverse_consistency", fmt(worst));
    c.expect(worst <= 0.1, "inverse consistency " + fmt(worst));
    const double t = seconds_since(t0);
    c.expect(t < 60.0, "runtime " + fmt(t) + "s");
}

// --- jacobian and energies -------------------------------------------------

void jacobian_energy(Checks &c) {
    const auto g = make_geometry({12, 11, 10});
    const auto id = jacobian_determinant(VectorField(g, FieldKind::displacement));
    c.expect(std::all_of(id.data().begin(), id.data().end(), [](double v) { return v == 1.0; }), "identity det != 1");

    const auto expand = jacobian_determinant(field_from(g, FieldKind::displacement, [](double x, double y, double z) { return Vec3{x, y, z} * 0.1; }));
    double err = 0.0;
    for (int z = 1; z < g.dims[2] - 1; ++z)
        for (int y = 1; y < g.dims[1] - 1; ++y)
            for (int x = 1; x < g.dims[0] - 1; ++x) err = std::max(err, std::abs(expand(x, y, z) - 1.331));
    c.note("expansion_err", fmt(err));
    c.expect(err <= 1e-6, "uniform expansion det error " + fmt(err));

    CounterRng rng(21, 0);
    int nonzero = 0;
    for (int t = 0; t < 10; ++t) {
        // dyadic coefficients keep every stencil evaluation exact
        auto r = [&] { return double(static_cast<int>(rng.below(257)) - 128) / 64.0; };
        const double A[9] = {r(), r(), r(), r(), r(), r(), r(), r(), r()};
        const Vec3 b{r(), r(), r()};
        const auto f = field_from(g, FieldKind::displacement, [&](double x, double y, double z) {
            return Vec3{A[0] * x + A[1] * y + A[2] * z, A[3] * x + A[4] * y + A[5] * z, A[6] * x + A[7] * y + A[8] * z} + b;
        });
        nonzero += bending_energy(f) != 0.0;
    }
    c.expect(nonzero == 0, std::to_string(nonzero) + " affine fields with nonzero bending energy");

    const auto trans = divergence(constant_field(g, FieldKind::displacement, {1, -2, 3}));
    const auto curl = divergence(field_from(g, FieldKind::displacement, [](double x, double y, double) { return Vec3{-y, x, 0}; }));
    bool zero = true;
    for (std::size_t i = 0; i < trans.size(); ++i) zero &= trans[i] == 0.0 && curl[i] == 0.0;
    c.expect(zero, "divergence not exactly zero on translation/curl");
}

// --- registration ----------------------------------------------------------

ScalarVolume smooth_blob_image(const GridGeometry &g) {
    ScalarVolume f(g);
    const Vec3 ctr{(g.dims[0] - 1) / 2.0, (g.dims[1] - 1) / 2.0, (g.dims[2] - 1) / 2.0};
    const Vec3 r{g.dims[0] / 3.0, g.dims[1] / 3.0, g.dims[2] / 3.0};
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x) {
                const Vec3 q{(x - ctr.x) / r.x, (y - ctr.y) / r.y, (z - ctr.z) / r.z};
                if (dot(q, q) < 1.0) f(x, y, z) = 0.6 + 0.4 * std::cos(3 * x / 8.0) * std::sin(y / 5.0) + 0.2 * std::sin(z / 4.0);
            }
    return gaussian_smooth(f, 1.0);
}

bool monotone_per_level(const RegResult &r) {
    int levels = 0;
    for (const auto &rec : r.loss_trace) levels = std::max(levels, rec.level + 1);
    for (int level = 0; level < levels; ++level) {
        double first = NAN, last = NAN;
        for (const auto &rec : r.loss_trace)
            if (rec.level == level) {
                if (std::isnan(first)) first = rec.terms.total;
                last = rec.terms.total;
            }
        if (!(last <= first)) return false;
    }
    return true;
}

void registration(Checks &c) {
    const auto t0 = Clock::now();
    // gradient check: 5 random 8^3 instances x 20 random voxels x 3 components
    const auto g8 = make_geometry({8, 8, 8});
    int bad = 0;
    double worst_rel = 0.0;
    for (std::uint64_t inst = 0; inst < 5; ++inst) {
        const auto moving = gaussian_smooth(random_volume(g8, 100 + inst), 1.0);
        const auto fixed = gaussian_smooth(random_volume(g8, 200 + inst), 1.0);
        VectorField u(g8, FieldKind::displacement);
        CounterRng rng(inst, 9);
        for (auto &v : u.data()) v = {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
        const auto grad = loss_gradient_smalldisp(u, moving, fixed);
        for (int k = 0; k < 20; ++k) {
            const int x = 1 + int(rng.below(6)), y = 1 + int(rng.below(6)), z = 1 + int(rng.below(6));
            const std::size_t i = g8.index(x, y, z);
            for (int a = 0; a < 3; ++a) {
                const double h = 1e-6;
                VectorField up = u, um = u;
                up[i][a] += h;
                um[i][a] -= h;
                const double fd = (data_term_smalldisp(up, moving, fixed) - data_term_smalldisp(um, moving, fixed)) / (2 * h);
                const double rel = std::abs(grad[i][a] - fd) / std::max(std::abs(fd), 1e-9);
                worst_rel = std::max(worst_rel, rel);
                bad += rel > 1e-3;
            }
        }
    }
    c.note("grad_rel_err", fmt(worst_rel));
    c.expect(bad == 0, std::to_string(bad) + " gradient components off by > 1e-3");

    std::vector<RegResult> results;
    const auto gt = make_geometry({32, 32, 28});
    const auto fixed = smooth_blob_image(gt);
    const auto moving = warp(fixed, constant_field(gt, FieldKind::displacement, {2, 0, 0}));
    RegParams p;
    p.iterations = 150;
    results.push_back(register_images(moving, fixed, p));
    Vec3 mean;
    int n = 0;
    const Vec3 ctr{15.5, 15.5, 13.5};
    for (int z = 0; z < gt.dims[2]; ++z)
        for (int y = 0; y < gt.dims[1]; ++y)
            for (int x = 0; x < gt.dims[0]; ++x) {
                const Vec3 q{(x - ctr.x) / (32 / 3.0), (y - ctr.y) / (32 / 3.0), (z - ctr.z) / (28 / 3.0)};
                if (dot(q, q) < 0.5) {
                    mean += results.back().displacement(x, y, z);
                    ++n;
                }
            }
    mean = mean * (1.0 / n);
    const double trans_err = norm(mean - Vec3{-2, 0, 0});
    c.note("translation_err", fmt(trans_err));
    c.expect(trans_err <= 0.5, "translation error " + fmt(trans_err));

    // fixture pair: phantom atlas onto a generated subject
    const auto atlas = make_phantom({});
    const auto subject = make_subject(atlas, 1);
    results.push_back(register_images(atlas.image, subject.image, RegParams{}));
    const auto &tr = results.back().loss_trace;
    const double ratio = tr.back().terms.data / tr.front().terms.data;
    c.note("fixture_data_ratio", fmt(ratio));
    c.expect(ratio <= 0.2, "fixture data term ratio " + fmt(ratio));

    for (const auto &r : results) {
        c.expect(monotone_per_level(r), "loss rises within a level");
        c.expect(min_interior_jacobian(r.displacement) > 0.0, "non-positive Jacobian");
    }
    const double t = seconds_since(t0);
    c.expect(t < 300.0, "runtime " + fmt(t) + "s");
}

// --- diffusion -------------------------------------------------------------

struct Moments {
    double mean = 0.0, var = 0.0;
};

Moments moments(const ScalarVolume &v) {
    double s = 0.0, s2 = 0.0;
    for (double x : v.data()) s += x;
    const double n = static_cast<double>(v.size());
    const double m = s / n;
    for (double x : v.data()) s2 += (x - m) * (x - m);
    return {m, s2 / n};
}

class FixedDenoiser final : public Denoiser {
public:
    explicit FixedDenoiser(ScalarVolume e) : e_(std::move(e)) {}
    ScalarVolume predict(const ScalarVolume &, int, const NoiseSchedule &, const Mask *) const override { return e_; }
    std::string name() const override { return "fixed"; }

private:
    ScalarVolume e_;
};

Mask ball(const GridGeometry &g, Vec3 ctr, double r) {
    Mask m(g);
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x) {
                const Vec3 d = Vec3(x, y, z) - ctr;
                m(x, y, z) = dot(d, d) <= r * r;
            }
    return m;
}

void diffusion(Checks &c) {
    const auto t0 = Clock::now();
    const auto s = default_schedule(50);

    const auto g = make_geometry({6, 5, 4});
    ScalarVolume x0 = random_volume(g, 4);
    for (auto &v : x0.data()) v += 0.1;
    const auto eps = gaussian_field(g, 1, 1, 1, 0);
    const auto back = reverse_step(forward_noise(x0, 1, eps, s), 1, FixedDenoiser(eps), s, nullptr);
    double rel = 0.0;
    for (std::size_t i = 0; i < x0.size(); ++i) rel = std::max(rel, std::abs(back[i] - x0[i]) / std::abs(x0[i]));
    c.note("single_step_rel", fmt(rel));
    c.expect(rel <= 1e-6, "single-step inversion " + fmt(rel));

    const auto gm = make_geometry({100, 50, 2});
    double var_err = 0.0;
    for (int t : {5, 25, 50}) {
        const auto xt = forward_noise(ScalarVolume(gm, 0.7), t, gaussian_field(gm, 3, 1, t, 0), s);
        var_err = std::max(var_err, std::abs(moments(xt).var / (1.0 - s.alpha_bar_at(t)) - 1.0));
    }
    c.note("forward_var_err", fmt(var_err));
    c.expect(var_err <= 0.05, "forward variance error " + fmt(var_err));

    const double mu = 0.5, var = 1.0, n = static_cast<double>(gm.voxel_count());
    const auto den = gaussian_analytic_denoiser(ScalarVolume(gm, mu), var);
    InpaintConfig cfg;
    cfg.schedule = s;
    cfg.seed = 3;
    const auto m = moments(inpaint_sample(ScalarVolume(gm), Mask(gm, 1), *den, cfg));
    c.note("chain_mean_err", fmt(std::abs(m.mean - mu)));
    c.note("chain_var_ratio", fmt(m.var / var));
    c.expect(std::abs(m.mean - mu) <= 4 * std::sqrt(var / n), "chain mean");
    c.expect(std::abs(m.var / var - 1.0) <= 0.1, "chain variance");

    const auto gi = make_geometry({20, 18, 16});
    ScalarVolume ramp(gi);
    for (int z = 0; z < 16; ++z)
        for (int y = 0; y < 18; ++y)
            for (int x = 0; x < 20; ++x) ramp(x, y, z) = 0.3 * x - 0.2 * y + 0.1 * z + 2.0;
    const Mask hole = ball(gi, {9, 8, 7}, 4.5);
    bool kept = true;
    const auto nd = neighborhood_denoiser(2);
    for (auto mode : {InpaintMode::paper_clean_known, InpaintMode::repaint_noised_known}) {
        InpaintConfig ic;
        ic.mode = mode;
        ic.seed = 11;
        ic.resample_jumps = mode == InpaintMode::repaint_noised_known ? 2 : 0;
        const auto a = inpaint_sample(ramp, hole, *nd, ic);
        for (std::size_t i = 0; i < a.size(); ++i)
            if (!hole[i]) kept &= a[i] == ramp[i];
    }
    c.expect(kept, "inpainting altered known voxels");

    const double tol = 1e-9;
    const auto h = harmonic_inpaint_detailed(ramp, hole, tol);
    double ramp_err = 0.0;
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp_err = std::max(ramp_err, std::abs(h.volume[i] - ramp[i]));
    c.note("harmonic_ramp_err", fmt(ramp_err));
    c.expect(h.residual <= tol && ramp_err <= 1e-6, "harmonic ramp error " + fmt(ramp_err));

    const auto noise = random_volume(gi, 5);
    const auto hn = harmonic_inpaint(noise, hole, 1e-10);
    const Mask boundary = mask_and(dilate(hole, 1.0), mask_not(hole));
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < hole.size(); ++i)
        if (boundary[i]) {
            lo = std::min(lo, noise[i]);
            hi = std::max(hi, noise[i]);
        }
    bool bounded = true;
    for (std::size_t i = 0; i < hole.size(); ++i)
        if (hole[i]) bounded &= hn[i] >= lo - 1e-9 && hn[i] <= hi + 1e-9;
    c.expect(bounded, "max principle violated");
    const double t = seconds_since(t0);
    c.expect(t < 300.0, "runtime " + fmt(t) + "s");
}

// --- synthesis -------------------------------------------------------------

void synthesis(Checks &c) {
    const auto atlas = make_phantom({});
    const auto healthy = make_subject(atlas, 7).image;
    SynthParams p;
    p.p_lesion = {26, 22, 18};
    p.seed = 3;

    const auto t0 = Clock::now();
    const auto sc = synthesize_lesion(healthy, p);
    const double t_case = seconds_since(t0);

    const double mse = mean_squared_difference(warp(sc.lesioned, sc.gt_displacement), sc.core_image);
    c.note("warp_mse", fmt(mse));
    c.expect(mse <= 1e-3, "warp consistency " + fmt(mse));
    const double minj = min_interior_jacobian(sc.gt_displacement);
    c.note("min_jacobian", fmt(minj));
    c.expect(minj > 0.0, "non-positive Jacobian");

    const Mask far = mask_not(within_distance(sc.final_mask, p.window));
    double locality = 0.0;
    for (std::size_t i = 0; i < far.size(); ++i)
        if (far[i]) locality = std::max(locality, std::abs(sc.lesioned[i] - sc.core_image[i]));
    c.note("locality", fmt(locality));
    c.expect(locality <= 1e-6, "locality " + fmt(locality));

    auto p0 = p;
    p0.severity = 0.0;
    const auto s0 = synthesize_lesion(healthy, p0);
    c.expect(s0.lesioned == s0.core_image && max_norm(s0.gt_displacement) == 0.0, "severity 0 is not exact");

    auto pu = p;
    pu.reg.lambda_div = 0.0;
    const auto unreg = synthesize_lesion(healthy, pu);
    const Mask region = mask_and(threshold_mask(healthy, 0.0), mask_not(sc.final_mask));
    const double dr = mean_abs_divergence(sc.gt_velocity, region), du = mean_abs_divergence(unreg.gt_velocity, region);
    c.note("div_reg", fmt(dr));
    c.note("div_unreg", fmt(du));
    c.expect(dr < du, "regularized divergence not lower");
    c.note("case_seconds", fmt(t_case, 3));
    c.expect(t_case < 300.0, "runtime per case " + fmt(t_case) + "s");
}

// --- experiment-based criteria ---------------------------------------------

struct Experiment {
    RunConfig config;
    ExperimentResult result;
    double seconds = 0.0;
    bool atlas_empty = false;
    double atlas_seconds = 0.0;
};

const Experiment &experiment() {
    static const Experiment e = [] {
        Experiment out;
        const auto t0 = Clock::now();
        out.result = run_experiment(out.config, [](const std::string &s) { std::cerr << "  [experiment] " << s << "\n"; });
        out.seconds = seconds_since(t0);
        // atlas against itself through the same pool
        const auto t1 = Clock::now();
        const auto atlas = make_phantom(out.config.phantom);
        out.atlas_empty =
            segment_lesion(atlas.image, atlas.image, out.result.pool, out.config.segmentation, out.config.registration).empty;
        out.atlas_seconds = seconds_since(t1);
        return out;
    }();
    return e;
}

void segmentation(Checks &c) {
    const auto &e = experiment();
    c.expect(e.atlas_empty, "atlas-vs-atlas mask not empty");
    double worst_fp = 0.0;
    for (const auto &h : e.result.healthy) worst_fp = std::max(worst_fp, h.false_positive_fraction);
    c.note("max_false_positive", fmt(worst_fp));
    c.expect(worst_fp <= 0.02, "false-positive fraction " + fmt(worst_fp));
    double mean = 0.0;
    for (const auto &o : e.result.cases) mean += o.segmentation_dice;
    mean /= std::max<std::size_t>(1, e.result.cases.size());
    c.note("mean_dice", fmt(mean));
    c.expect(mean >= 0.6, "mean segmentation Dice " + fmt(mean));
    // pool, held-out checks and the atlas self-check
    const double t = e.result.timing.value("pool", 0.0) + e.result.timing.value("holdout", 0.0) + e.atlas_seconds;
    c.note("seconds", fmt(t, 4));
    c.expect(t < 900.0, "runtime " + fmt(t) + "s");
}

void end_to_end(Checks &c) {
    const auto &cases = experiment().result.cases;
    int nmse_ok = 0, core_ok = 0;
    for (const auto &o : cases) {
        nmse_ok += o.nmse_estimate <= o.nmse_lesioned;
        core_ok += o.core_dice >= 0.5;
    }
    const int n = static_cast<int>(cases.size());
    c.note("nmse_improved", std::to_string(nmse_ok) + "/" + std::to_string(n));
    c.note("core_dice_ge_0.5", std::to_string(core_ok) + "/" + std::to_string(n));
    c.expect(n > 0 && nmse_ok == n, "NMSE improved on " + std::to_string(nmse_ok) + "/" + std::to_string(n));
    c.expect(10 * core_ok >= 8 * n, "core Dice >= 0.5 on " + std::to_string(core_ok) + "/" + std::to_string(n));
}

void labeling(Checks &c) {
    const auto &e = experiment();
    const auto &cases = e.result.cases;
    int wins = 0, field_wins = 0;
    double whole = 0.0, peri = 0.0;
    for (const auto &o : cases) {
        wins += o.dice_proposed >= o.dice_baseline;
        field_wins += o.field_nmse_proposed <= o.field_nmse_baseline;
        whole += o.dice_proposed - o.dice_baseline;
        peri += o.dice_proposed_peri - o.dice_baseline_peri;
    }
    const int n = static_cast<int>(cases.size());
    if (n > 0) {
        whole /= n;
        peri /= n;
    }
    c.note("proposed_ge_baseline", std::to_string(wins) + "/" + std::to_string(n));
    c.note("mean_whole_gain", fmt(whole));
    c.note("mean_peri_gain", fmt(peri));
    c.note("field_nmse_wins", std::to_string(field_wins) + "/" + std::to_string(n));
    c.note("experiment_seconds", fmt(e.seconds, 4));
    c.expect(n > 0 && 10 * wins >= 8 * n, "proposed >= baseline on " + std::to_string(wins) + "/" + std::to_string(n));
    c.expect(peri >= whole, "peri-lesional gain below whole-brain gain");
    c.expect(n > 0 && 10 * field_wins >= 8 * n, "field NMSE better on " + std::to_string(field_wins) + "/" + std::to_string(n));
    c.expect(e.seconds <= 3600.0, "experiment runtime " + fmt(e.seconds) + "s");
}

// --- reproducibility -------------------------------------------------------

std::string slurp(const fs::path &p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void reproducibility(Checks &c) {
    std::random_device rd;
    const fs::path dir = fs::temp_directory_path() / ("lesionrev_accept_" + std::to_string(rd()));
    fs::create_directories(dir);
    const nlohmann::json cfg = {{"seed", 5},
                                {"cohort", {{"subjects", 5}, {"holdout", 1}}},
                                {"registration", {{"iterations", 40}}},
                                {"experiment", {{"cases", 2}}}};
    std::ofstream(dir / "small.json") << cfg.dump(2);
    std::vector<std::string> reports;
    for (const char *run : {"a", "b"}) {
        const std::string cmd = std::string("\"") + LESIONREV_CLI_PATH + "\" eval --config \"" + (dir / "small.json").string() +
                                "\" --threads 1 --out \"" + (dir / run).string() + "\" 2>/dev/null";
        const int rc = std::system(cmd.c_str());
        c.expect(rc == 0, std::string("eval run ") + run + " exit " + std::to_string(rc));
        reports.push_back(slurp(dir / run / "report.csv") + "\x1f" + slurp(dir / run / "report.json"));
    }
    c.note("report_bytes", reports[0].size());
    c.expect(reports[0].size() > 1, "empty report");
    c.expect(reports[0] == reports[1], "reports differ");
    std::error_code ec;
    fs::remove_all(dir, ec);
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Checks &)>>> criteria = {
        {"field_algebra", field_algebra},   {"jacobian_energy", jacobian_energy}, {"registration", registration},
        {"diffusion", diffusion},           {"synthesis", synthesis},             {"segmentation", segmentation},
        {"end_to_end_reversal", end_to_end}, {"labeling", labeling},              {"reproducibility", reproducibility},
    };
    int failures = 0;
    for (const auto &[name, fn] : criteria) {
        Checks c;
        const auto t0 = Clock::now();
        try {
            fn(c);
        } catch (const std::exception &e) {
            c.failed.push_back(std::string("exception: ") + e.what());
        }
        const bool pass = c.failed.empty();
        failures += !pass;
        std::string why;
        for (const auto &f : c.failed) why += (why.empty() ? "" : "; ") + f;
        std::printf("%s %s (%.1fs) %s%s%s\n", pass ? "PASS" : "FAIL", name.c_str(), seconds_since(t0), c.detail.str().c_str(),
                    pass ? "" : "| ", why.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
