#include "lesionrev/registration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "lesionrev/kernels.hpp"
#include "lesionrev/metrics.hpp"
#include "lesionrev/noise_geom.hpp"
#include "lesionrev/parallel.hpp"
#include "lesionrev/volume_ops.hpp"

namespace lesionrev {

void RegParams::validate() const {
    auto nonneg = [](double v, const char *name) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string("RegParams: ") + name + " must be finite and >= 0");
    };
    nonneg(lambda_bend, "lambda_bend");
    nonneg(lambda_div, "lambda_div");
    nonneg(fluid_sigma, "fluid_sigma");
    nonneg(diffusion_sigma, "diffusion_sigma");
    nonneg(bend_rate, "bend_rate");
    nonneg(div_rate, "div_rate");
    if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("RegParams: step must be > 0");
    if (iterations < 1) throw std::invalid_argument("RegParams: iterations must be >= 1");
    if (pyramid_levels < 1) throw std::invalid_argument("RegParams: pyramid_levels must be >= 1");
    if (exp_steps < 1 || exp_steps > 20) throw std::invalid_argument("RegParams: exp_steps must be in [1, 20]");
    if (!(sdf_clamp > 0.0)) throw std::invalid_argument("RegParams: sdf_clamp must be > 0");
}

namespace {

const char *force_name(DemonsForce f) {
    switch (f) {
    case DemonsForce::fixed: return "fixed";
    case DemonsForce::symmetric: return "symmetric";
    default: return "moving";
    }
}

} // namespace

nlohmann::json to_json(const RegParams &p) {
    return {{"lambda_bend", p.lambda_bend}, {"lambda_div", p.lambda_div},   {"iterations", p.iterations},
            {"step", p.step},               {"fluid_sigma", p.fluid_sigma}, {"diffusion_sigma", p.diffusion_sigma},
            {"pyramid_levels", p.pyramid_levels}, {"exp_steps", p.exp_steps},
            {"mode", p.mode == RegMode::sdf ? "sdf" : "intensity"}, {"force", force_name(p.force)},
            {"seed", p.seed},               {"bend_rate", p.bend_rate},     {"div_rate", p.div_rate},
            {"sdf_clamp", p.sdf_clamp}};
}

RegParams reg_params_from_json(const nlohmann::json &j, RegParams base) {
    if (!j.is_object()) throw std::invalid_argument("registration params must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto &k = it.key();
        const auto &v = it.value();
        try {
            if (k == "lambda_bend") base.lambda_bend = v.get<double>();
            else if (k == "lambda_div") base.lambda_div = v.get<double>();
            else if (k == "iterations") base.iterations = v.get<int>();
            else if (k == "step") base.step = v.get<double>();
            else if (k == "fluid_sigma") base.fluid_sigma = v.get<double>();
            else if (k == "diffusion_sigma") base.diffusion_sigma = v.get<double>();
            else if (k == "pyramid_levels") base.pyramid_levels = v.get<int>();
            else if (k == "exp_steps") base.exp_steps = v.get<int>();
            else if (k == "seed") base.seed = v.get<std::uint64_t>();
            else if (k == "bend_rate") base.bend_rate = v.get<double>();
            else if (k == "div_rate") base.div_rate = v.get<double>();
            else if (k == "sdf_clamp") base.sdf_clamp = v.get<double>();
            else if (k == "mode") {
                const auto s = v.get<std::string>();
                if (s == "intensity") base.mode = RegMode::intensity;
                else if (s == "sdf") base.mode = RegMode::sdf;
                else throw std::invalid_argument("registration mode must be \"intensity\" or \"sdf\"");
            } else if (k == "force") {
                const auto s = v.get<std::string>();
                if (s == "moving") base.force = DemonsForce::moving;
                else if (s == "fixed") base.force = DemonsForce::fixed;
                else if (s == "symmetric") base.force = DemonsForce::symmetric;
                else throw std::invalid_argument("registration force must be \"moving\", \"fixed\" or \"symmetric\"");
            } else {
                throw std::invalid_argument("unknown registration key: " + k);
            }
        } catch (const nlohmann::json::exception &e) {
            throw std::invalid_argument("registration key " + k + ": " + e.what());
        }
    }
    base.validate();
    return base;
}

nlohmann::json loss_trace_json(const RegResult &r) {
    auto arr = nlohmann::json::array();
    for (const auto &rec : r.loss_trace) {
        arr.push_back({{"level", rec.level},
                       {"iteration", rec.iteration},
                       {"total", rec.terms.total},
                       {"data", rec.terms.data},
                       {"bend", rec.terms.bend},
                       {"div", rec.terms.div}});
    }
    return {{"converged", r.converged}, {"mask_dice", std::isfinite(r.mask_dice) ? nlohmann::json(r.mask_dice) : nlohmann::json()},
            {"trace", arr}};
}

namespace {

LossTerms loss_from(const VectorField &v, const VectorField &d, const ScalarVolume &warped, const ScalarVolume &fixed,
                    const RegParams &p) {
    LossTerms t;
    t.data = mean_squared_difference(warped, fixed);
    t.bend = bending_energy(d);
    t.div = divergence_penalty(v);
    t.total = t.data + p.lambda_bend * t.bend + p.lambda_div * t.div;
    return t;
}

double interior_voxels(const GridGeometry &g) {
    return static_cast<double>(g.dims[0] - 2) * (g.dims[1] - 2) * (g.dims[2] - 2);
}

void check_pair(const ScalarVolume &moving, const ScalarVolume &fixed, const char *what) {
    require_same_geometry(moving.geometry(), fixed.geometry(), what);
    if (moving.geometry().min_dim() < 4) throw std::invalid_argument(std::string(what) + ": every dimension must be >= 4");
    if (!all_finite(moving) || !all_finite(fixed)) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

// Thirion demons force on the warped image, clamped to `max_step`.
VectorField demons_force(const ScalarVolume &warped, const ScalarVolume &fixed, const std::vector<Vec3> &fixed_grad, DemonsForce mode,
                         double max_step) {
    const auto &g = warped.geometry();
    std::vector<Vec3> grad;
    if (mode == DemonsForce::fixed) {
        grad = fixed_grad;
    } else {
        grad = spatial_gradient_vectors(warped);
        if (mode == DemonsForce::symmetric)
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = (grad[i] + fixed_grad[i]) * 0.5;
    }
    VectorField f(g, FieldKind::velocity);
#pragma omp parallel for schedule(static)
    for (int z = 0; z < g.dims[2]; ++z) {
        for (int y = 0; y < g.dims[1]; ++y) {
            for (int x = 0; x < g.dims[0]; ++x) {
                const std::size_t i = g.index(x, y, z);
                const double diff = warped[i] - fixed[i];
                const Vec3 &gr = grad[i];
                const double den = dot(gr, gr) + diff * diff;
                if (den < 1e-12) continue;
                Vec3 u = gr * (diff / den);
                const double n = norm(u);
                if (n > max_step) u *= max_step / n;
                f[i] = u;
            }
        }
    }
    return f;
}

struct LevelOutcome {
    bool converged = false;
};

// One demons update from v: force step, regularizer gradient steps, then
// diffusion smoothing.
VectorField demons_update(const VectorField &v, const VectorField &d, const ScalarVolume &warped, const ScalarVolume &fixed,
                          const std::vector<Vec3> &fixed_grad, const RegParams &p, double n_interior) {
    const VectorField force = smooth_field(demons_force(warped, fixed, fixed_grad, p.force, p.step), p.fluid_sigma);
    VectorField next = v;
    auto vd = next.data();
    for (std::size_t i = 0; i < vd.size(); ++i) vd[i] -= force[i];
    if (p.lambda_bend > 0.0) {
        const auto gb = bending_energy_gradient(d);
        const double s = p.bend_rate * p.lambda_bend * n_interior;
        for (std::size_t i = 0; i < vd.size(); ++i) vd[i] -= gb[i] * s;
    }
    if (p.lambda_div > 0.0) {
        const auto gd = divergence_penalty_gradient(v);
        const double s = p.div_rate * p.lambda_div * n_interior;
        for (std::size_t i = 0; i < vd.size(); ++i) vd[i] -= gd[i] * s;
    }
    if (p.diffusion_sigma > 0.0) next = smooth_field(next, p.diffusion_sigma);
    return next;
}

// Runs one pyramid level of plain demons updates. The level hands back its
// lowest-loss iterate; when that is not the last one, it is restored and
// appended to the trace as the level's closing record.
LevelOutcome run_level(VectorField &v, const ScalarVolume &moving, const ScalarVolume &fixed, const RegParams &p, int level,
                       std::vector<LossRecord> &trace) {
    const auto &g = moving.geometry();
    const double n_interior = interior_voxels(g);
    std::vector<Vec3> fixed_grad;
    if (p.force != DemonsForce::moving) fixed_grad = spatial_gradient_vectors(fixed);
    std::vector<double> totals;
    totals.reserve(static_cast<std::size_t>(p.iterations) + 1);
    VectorField best_v = v;
    LossTerms best_t;
    best_t.total = INFINITY;
    LevelOutcome out;
    int it = 0;
    for (;; ++it) {
        const VectorField d = exp_velocity(v, p.exp_steps);
        const ScalarVolume warped = warp(moving, d);
        const LossTerms t = loss_from(v, d, warped, fixed, p);
        if (!std::isfinite(t.total)) throw std::runtime_error("registration diverged: non-finite loss");
        trace.push_back({level, it, t});
        totals.push_back(t.total);
        if (t.total < best_t.total) {
            best_t = t;
            best_v = v;
        }
        if (it >= 20) {
            const double before = totals[static_cast<std::size_t>(it - 20)];
            if (before - t.total <= 1e-5 * before) {
                out.converged = true;
                break;
            }
        }
        if (it == p.iterations) break;
        v = demons_update(v, d, warped, fixed, fixed_grad, p, n_interior);
    }
    if (best_t.total < totals.back()) {
        v = std::move(best_v);
        trace.push_back({level, it + 1, best_t});
    }
    return out;
}

} // namespace

LossTerms registration_loss(const VectorField &v, const ScalarVolume &moving, const ScalarVolume &fixed, const RegParams &params) {
    check_pair(moving, fixed, "registration_loss");
    require_same_geometry(v.geometry(), moving.geometry(), "registration_loss");
    if (v.kind() != FieldKind::velocity) throw std::invalid_argument("registration_loss: expected a velocity field");
    const VectorField d = exp_velocity(v, params.exp_steps);
    return loss_from(v, d, warp(moving, d), fixed, params);
}

RegResult register_images(const ScalarVolume &moving, const ScalarVolume &fixed, const RegParams &params) {
    params.validate();
    check_pair(moving, fixed, "register");
    std::vector<ScalarVolume> mov{moving}, fix{fixed};
    while (static_cast<int>(mov.size()) < params.pyramid_levels) {
        const GridGeometry cg = downsample2_geometry(mov.back().geometry());
        if (cg.min_dim() < 8) break;
        mov.push_back(downsample2(mov.back()));
        fix.push_back(downsample2(fix.back()));
    }
    const int coarsest = static_cast<int>(mov.size()) - 1;
    VectorField v(mov.back().geometry(), FieldKind::velocity);
    RegResult out;
    for (int level = coarsest; level >= 0; --level) {
        const auto &m = mov[static_cast<std::size_t>(level)];
        if (level != coarsest) v = resample_field(v, m.geometry(), 2.0);
        const auto o = run_level(v, m, fix[static_cast<std::size_t>(level)], params, level, out.loss_trace);
        if (level == 0) out.converged = o.converged;
    }
    // Keep the caller's geometry (origin, spacing) on the result.
    out.velocity = VectorField(moving.geometry(), FieldKind::velocity, v.values());
    out.displacement = exp_velocity(out.velocity, params.exp_steps);
    return out;
}

RegParams mask_registration_defaults() {
    RegParams p;
    p.mode = RegMode::sdf;
    p.force = DemonsForce::moving;
    p.lambda_div = 0.1;
    p.diffusion_sigma = 0.5;
    p.sdf_clamp = 4.0;
    return p;
}

ScalarVolume clamped_signed_distance(const Mask &m, double clamp) {
    if (!(clamp > 0.0)) throw std::invalid_argument("clamped_signed_distance: clamp must be > 0");
    ScalarVolume s = signed_distance(m);
    for (auto &x : s.data()) x = std::clamp(x, -clamp, clamp);
    return s;
}

RegResult register_masks(const Mask &core, const Mask &final_mask, const RegParams &params) {
    require_same_geometry(core.geometry(), final_mask.geometry(), "register_masks");
    if (count_nonzero(core) == 0 || count_nonzero(final_mask) == 0) throw std::invalid_argument("register_masks: empty mask");
    RegParams p = params;
    p.mode = RegMode::sdf;
    p.validate();
    const ScalarVolume moving = clamped_signed_distance(final_mask, p.sdf_clamp);
    const ScalarVolume fixed = clamped_signed_distance(core, p.sdf_clamp);
    RegResult r = register_images(moving, fixed, p);
    r.mask_dice = dice(warp(final_mask, r.displacement), core);
    return r;
}

double data_term_smalldisp(const VectorField &u, const ScalarVolume &moving, const ScalarVolume &fixed) {
    require_same_geometry(u.geometry(), moving.geometry(), "data_term_smalldisp");
    require_same_geometry(moving.geometry(), fixed.geometry(), "data_term_smalldisp");
    return mean_squared_difference(warp(moving, with_kind(u, FieldKind::displacement)), fixed);
}

VectorField loss_gradient_smalldisp(const VectorField &u, const ScalarVolume &moving, const ScalarVolume &fixed) {
    require_same_geometry(u.geometry(), moving.geometry(), "loss_gradient_smalldisp");
    require_same_geometry(moving.geometry(), fixed.geometry(), "loss_gradient_smalldisp");
    const auto &g = moving.geometry();
    const double scale = 2.0 / static_cast<double>(moving.size());
    VectorField out(g, FieldKind::displacement);
#pragma omp parallel for schedule(static)
    for (int z = 0; z < g.dims[2]; ++z) {
        for (int y = 0; y < g.dims[1]; ++y) {
            for (int x = 0; x < g.dims[0]; ++x) {
                const std::size_t i = g.index(x, y, z);
                const Vec3 q = Vec3(x, y, z) + u[i];
                const auto vg = kernels::trilinear_with_gradient(moving.data().data(), g.dims, q.x, q.y, q.z);
                out[i] = vg.gradient * ((vg.value - fixed[i]) * scale);
            }
        }
    }
    return out;
}

double min_interior_jacobian(const VectorField &d) {
    const auto &g = d.geometry();
    const auto jac = jacobian_determinant(d);
    double m = INFINITY;
    for (int z = 1; z < g.dims[2] - 1; ++z)
        for (int y = 1; y < g.dims[1] - 1; ++y)
            for (int x = 1; x < g.dims[0] - 1; ++x) m = std::min(m, jac(x, y, z));
    return m;
}

} // namespace lesionrev
