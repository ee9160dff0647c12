#include "lesionrev/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lesionrev/parallel.hpp"
#include "lesionrev/rng.hpp"
#include "lesionrev/volume_ops.hpp"

namespace lesionrev {

NoiseSchedule make_schedule(int T, double beta_start, double beta_end) {
    if (T < 1 || T > 10000) throw std::invalid_argument("make_schedule: T must be in [1, 10000]");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
        throw std::invalid_argument("make_schedule: need 0 < beta_start <= beta_end < 1");
    NoiseSchedule s;
    s.T = T;
    s.beta.resize(static_cast<std::size_t>(T));
    s.alpha.resize(static_cast<std::size_t>(T));
    s.alpha_bar.resize(static_cast<std::size_t>(T));
    double log_abar = 0.0;
    for (int i = 0; i < T; ++i) {
        const double frac = T == 1 ? 0.0 : static_cast<double>(i) / (T - 1);
        const double b = beta_start + (beta_end - beta_start) * frac;
        s.beta[static_cast<std::size_t>(i)] = b;
        s.alpha[static_cast<std::size_t>(i)] = 1.0 - b;
        log_abar += std::log1p(-b);
        s.alpha_bar[static_cast<std::size_t>(i)] = i == 0 ? 1.0 - b : std::exp(log_abar);
    }
    return s;
}

NoiseSchedule default_schedule(int T) {
    if (T < 1 || T > 10000) throw std::invalid_argument("default_schedule: T must be in [1, 10000]");
    const double scale = 1000.0 / T;
    return make_schedule(T, std::min(1e-4 * scale, 0.5), std::min(2e-2 * scale, 0.5));
}

namespace {

void check_t(int t, const NoiseSchedule &s, int lo, const char *what) {
    if (t < lo || t > s.T) throw std::invalid_argument(std::string(what) + ": t out of range");
}

} // namespace

ScalarVolume forward_noise(const ScalarVolume &x0, int t, const ScalarVolume &eps, const NoiseSchedule &sched) {
    // t = 0 is allowed and returns x0.
    check_t(t, sched, 0, "forward_noise");
    require_same_geometry(x0.geometry(), eps.geometry(), "forward_noise");
    const double a = std::sqrt(sched.alpha_bar_at(t)), b = std::sqrt(1.0 - sched.alpha_bar_at(t));
    ScalarVolume out(x0.geometry());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

ScalarVolume predict_x0(const ScalarVolume &x_t, int t, const ScalarVolume &eps, const NoiseSchedule &sched) {
    check_t(t, sched, 1, "predict_x0");
    require_same_geometry(x_t.geometry(), eps.geometry(), "predict_x0");
    const double a = std::sqrt(sched.alpha_bar_at(t)), b = std::sqrt(1.0 - sched.alpha_bar_at(t));
    ScalarVolume out(x_t.geometry());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_t[i] - b * eps[i]) / a;
    return out;
}

ScalarVolume masked_forward(const ScalarVolume &x0, const ScalarVolume &x_t, const Mask &m) {
    require_same_geometry(x0.geometry(), x_t.geometry(), "masked_forward");
    require_same_geometry(x0.geometry(), m.geometry(), "masked_forward");
    ScalarVolume out(x0.geometry());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = m[i] ? x_t[i] : x0[i];
    return out;
}

namespace {

class GaussianAnalytic final : public Denoiser {
public:
    GaussianAnalytic(ScalarVolume mu, double var) : mu_(std::move(mu)), var_(var) {}
    ScalarVolume predict(const ScalarVolume &x_t, int t, const NoiseSchedule &sched, const Mask *) const override {
        require_same_geometry(x_t.geometry(), mu_.geometry(), "gaussian_analytic_denoiser");
        check_t(t, sched, 1, "denoiser");
        const double ab = sched.alpha_bar_at(t), sab = std::sqrt(ab), s1 = std::sqrt(1.0 - ab);
        ScalarVolume eps(x_t.geometry());
        for (std::size_t i = 0; i < eps.size(); ++i) {
            const double post = (sab * var_ * x_t[i] + (1.0 - ab) * mu_[i]) / (ab * var_ + (1.0 - ab));
            eps[i] = (x_t[i] - sab * post) / s1;
        }
        return eps;
    }
    std::string name() const override { return "gaussian_analytic"; }

private:
    ScalarVolume mu_;
    double var_;
};

class Neighborhood final : public Denoiser {
public:
    explicit Neighborhood(int radius) : radius_(radius) {}
    ScalarVolume predict(const ScalarVolume &x_t, int t, const NoiseSchedule &sched, const Mask *) const override {
        check_t(t, sched, 1, "denoiser");
        const double s1 = std::sqrt(1.0 - sched.alpha_bar_at(t));
        // sqrt(abar) * x0_hat is the box mean itself.
        const ScalarVolume bm = box_mean(x_t, radius_);
        ScalarVolume eps(x_t.geometry());
        for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = (x_t[i] - bm[i]) / s1;
        return eps;
    }
    std::string name() const override { return "neighborhood"; }

private:
    int radius_;
};

} // namespace

std::unique_ptr<Denoiser> gaussian_analytic_denoiser(ScalarVolume mu, double var) {
    if (!(var > 0.0)) throw std::invalid_argument("gaussian_analytic_denoiser: var must be > 0");
    return std::make_unique<GaussianAnalytic>(std::move(mu), var);
}

std::unique_ptr<Denoiser> neighborhood_denoiser(int radius) {
    if (radius < 1) throw std::invalid_argument("neighborhood_denoiser: radius must be >= 1");
    return std::make_unique<Neighborhood>(radius);
}

ScalarVolume reverse_step(const ScalarVolume &x_t, int t, const Denoiser &denoiser, const NoiseSchedule &sched, const ScalarVolume *z,
                          const Mask *m) {
    check_t(t, sched, 1, "reverse_step");
    const ScalarVolume eps = denoiser.predict(x_t, t, sched, m);
    require_same_geometry(eps.geometry(), x_t.geometry(), "reverse_step");
    if (z) require_same_geometry(z->geometry(), x_t.geometry(), "reverse_step");
    const double at = sched.alpha_at(t), ab = sched.alpha_bar_at(t);
    const double inv = 1.0 / std::sqrt(at), coef = (1.0 - at) / std::sqrt(1.0 - ab);
    const double sigma = (t > 1 && z) ? std::sqrt(sched.beta_at(t)) : 0.0;
    ScalarVolume out(x_t.geometry());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = inv * (x_t[i] - coef * eps[i]);
        if (sigma > 0.0) out[i] += sigma * (*z)[i];
    }
    return out;
}

const char *to_string(InpaintMode mode) {
    return mode == InpaintMode::paper_clean_known ? "paper_clean_known" : "repaint_noised_known";
}

InpaintMode inpaint_mode_from_string(const std::string &s) {
    if (s == "paper_clean_known") return InpaintMode::paper_clean_known;
    if (s == "repaint_noised_known") return InpaintMode::repaint_noised_known;
    throw std::invalid_argument("unknown inpaint mode: " + s);
}

namespace {

constexpr std::uint64_t kDiffusionStream = 0xD1FF0000ull;
enum Purpose : std::uint64_t { kInit = 1, kStep = 2, kKnown = 3, kJump = 4 };

} // namespace

ScalarVolume gaussian_field(const GridGeometry &g, std::uint64_t seed, std::uint64_t purpose, int t, int jump) {
    const std::uint64_t stream =
        splitmix64(kDiffusionStream ^ (purpose << 48) ^ (static_cast<std::uint64_t>(t) << 20) ^ static_cast<std::uint64_t>(jump));
    ScalarVolume z(g);
#pragma omp parallel for schedule(static)
    for (int k = 0; k < g.dims[2]; ++k) {
        const std::size_t begin = g.index(0, 0, k), end = begin + static_cast<std::size_t>(g.dims[0]) * g.dims[1];
        for (std::size_t i = begin; i < end; ++i) z[i] = standard_normal(seed, stream, i);
    }
    return z;
}

ScalarVolume inpaint_sample(const ScalarVolume &x0_known, const Mask &m, const Denoiser &denoiser, const InpaintConfig &cfg) {
    require_same_geometry(x0_known.geometry(), m.geometry(), "inpaint_sample");
    if (count_nonzero(m) == 0) throw std::invalid_argument("inpaint_sample: empty mask");
    if (!all_finite(x0_known)) throw std::invalid_argument("inpaint_sample: non-finite input");
    if (cfg.resample_jumps < 0) throw std::invalid_argument("inpaint_sample: resample_jumps must be >= 0");
    if (cfg.resample_jumps > 0 && cfg.mode != InpaintMode::repaint_noised_known)
        throw std::invalid_argument("inpaint_sample: resample_jumps applies to repaint mode only");
    const auto &sched = cfg.schedule;
    if (sched.T < 1) throw std::invalid_argument("inpaint_sample: empty schedule");
    const auto &g = x0_known.geometry();

    // Known region at step t: clean data, or data noised to level t.
    auto known_at = [&](int t, int jump) {
        if (cfg.mode == InpaintMode::paper_clean_known || t == 0) return x0_known;
        return forward_noise(x0_known, t, gaussian_field(g, cfg.seed, kKnown, t, jump), sched);
    };

    ScalarVolume x = masked_forward(known_at(sched.T, 0), gaussian_field(g, cfg.seed, kInit, sched.T, 0), m);
    for (int t = sched.T; t >= 1; --t) {
        for (int j = 0;; ++j) {
            const ScalarVolume z = gaussian_field(g, cfg.seed, kStep, t, j);
            const ScalarVolume prev = reverse_step(x, t, denoiser, sched, &z, &m);
            x = masked_forward(known_at(t - 1, j), prev, m);
            if (j >= cfg.resample_jumps || t == 1) break;
            // Re-noise one step and repeat.
            const ScalarVolume e = gaussian_field(g, cfg.seed, kJump, t, j);
            const double a = std::sqrt(sched.alpha_at(t)), b = std::sqrt(sched.beta_at(t));
            for (std::size_t i = 0; i < x.size(); ++i) x[i] = a * x[i] + b * e[i];
        }
    }
    return x;
}

HarmonicNonConvergence::HarmonicNonConvergence(double residual, int iterations)
    : std::runtime_error("harmonic_inpaint: no convergence after " + std::to_string(iterations) + " iterations, residual " +
                         std::to_string(residual)),
      residual_(residual), iterations_(iterations) {}

double harmonic_residual(const ScalarVolume &vol, const Mask &m) {
    const auto &g = vol.geometry();
    double worst = 0.0;
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x) {
                const std::size_t i = g.index(x, y, z);
                if (!m[i]) continue;
                double s = 0.0;
                int k = 0;
                const int nb[6][3] = {{x - 1, y, z}, {x + 1, y, z}, {x, y - 1, z}, {x, y + 1, z}, {x, y, z - 1}, {x, y, z + 1}};
                for (const auto &q : nb)
                    if (g.contains(q[0], q[1], q[2])) {
                        s += vol(q[0], q[1], q[2]);
                        ++k;
                    }
                worst = std::max(worst, std::abs(s - k * vol[i]));
            }
    return worst;
}

HarmonicResult harmonic_inpaint_detailed(const ScalarVolume &vol, const Mask &m, double tol, int max_iter) {
    require_same_geometry(vol.geometry(), m.geometry(), "harmonic_inpaint");
    const std::size_t nm = count_nonzero(m);
    if (nm == 0) throw std::invalid_argument("harmonic_inpaint: empty mask");
    if (nm == m.size()) throw std::invalid_argument("harmonic_inpaint: mask covers the whole grid");
    if (!(tol > 0.0)) throw std::invalid_argument("harmonic_inpaint: tol must be > 0");
    if (max_iter < 1) throw std::invalid_argument("harmonic_inpaint: max_iter must be >= 1");
    const auto &g = vol.geometry();

    // Start from the mean of the Dirichlet data touching the mask.
    std::array<int, 3> lo{g.dims[0], g.dims[1], g.dims[2]}, hi{-1, -1, -1};
    double bsum = 0.0;
    std::size_t bcount = 0;
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x) {
                if (!m(x, y, z)) continue;
                const int c[3] = {x, y, z};
                for (int a = 0; a < 3; ++a) {
                    lo[a] = std::min(lo[a], c[a]);
                    hi[a] = std::max(hi[a], c[a]);
                }
                const int nb[6][3] = {{x - 1, y, z}, {x + 1, y, z}, {x, y - 1, z}, {x, y + 1, z}, {x, y, z - 1}, {x, y, z + 1}};
                for (const auto &q : nb)
                    if (g.contains(q[0], q[1], q[2]) && !m(q[0], q[1], q[2])) {
                        bsum += vol(q[0], q[1], q[2]);
                        ++bcount;
                    }
            }
    HarmonicResult r{vol, 0.0, 0};
    const double init = bcount ? bsum / static_cast<double>(bcount) : 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i]) r.volume[i] = init;
    const int extent = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]}) + 3;
    const double omega = 2.0 / (1.0 + std::sin(std::numbers::pi / extent));

    auto &u = r.volume;
    for (int it = 1; it <= max_iter; ++it) {
        for (int colour = 0; colour < 2; ++colour) {
#pragma omp parallel for schedule(static)
            for (int z = lo[2]; z <= hi[2]; ++z)
                for (int y = lo[1]; y <= hi[1]; ++y)
                    for (int x = lo[0]; x <= hi[0]; ++x) {
                        if (((x + y + z) & 1) != colour) continue;
                        const std::size_t i = g.index(x, y, z);
                        if (!m[i]) continue;
                        double s = 0.0;
                        int k = 0;
                        const int nb[6][3] = {{x - 1, y, z}, {x + 1, y, z}, {x, y - 1, z}, {x, y + 1, z}, {x, y, z - 1}, {x, y, z + 1}};
                        for (const auto &q : nb)
                            if (g.contains(q[0], q[1], q[2])) {
                                s += u(q[0], q[1], q[2]);
                                ++k;
                            }
                        u[i] += omega * (s / k - u[i]);
                    }
        }
        if (it % 10 == 0 || it == max_iter) {
            r.residual = harmonic_residual(u, m);
            r.iterations = it;
            if (r.residual <= tol) return r;
        }
    }
    throw HarmonicNonConvergence(r.residual, max_iter);
}

ScalarVolume harmonic_inpaint(const ScalarVolume &vol, const Mask &m, double tol, int max_iter) {
    return harmonic_inpaint_detailed(vol, m, tol, max_iter).volume;
}

} // namespace lesionrev
