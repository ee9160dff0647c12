#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lesionrev/volume.hpp"

namespace lesionrev {

struct NoiseSchedule {
    int T = 0;
    // Index 0 holds t = 1.
    std::vector<double> beta;
    std::vector<double> alpha;
    std::vector<double> alpha_bar;

    double beta_at(int t) const { return beta.at(static_cast<std::size_t>(t - 1)); }
    double alpha_at(int t) const { return alpha.at(static_cast<std::size_t>(t - 1)); }
    // alpha_bar at t = 0 is 1.
    double alpha_bar_at(int t) const { return t == 0 ? 1.0 : alpha_bar.at(static_cast<std::size_t>(t - 1)); }
};

// Linear beta from beta_start to beta_end; alpha_bar by cumulative product.
NoiseSchedule make_schedule(int T, double beta_start = 1e-4, double beta_end = 2e-2);

// Linear schedule with the usual 1000-step endpoints scaled by 1000 / T, so a
// short chain still ends near pure noise.
NoiseSchedule default_schedule(int T);

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps
ScalarVolume forward_noise(const ScalarVolume &x0, int t, const ScalarVolume &eps, const NoiseSchedule &sched);

// Algebraic inverse of forward_noise given the noise: (x_t - sqrt(1 - abar_t) eps) / sqrt(abar_t).
ScalarVolume predict_x0(const ScalarVolume &x_t, int t, const ScalarVolume &eps, const NoiseSchedule &sched);

// x_t inside m, x0 outside. m = 1 marks the region to inpaint.
ScalarVolume masked_forward(const ScalarVolume &x0, const ScalarVolume &x_t, const Mask &m);

class Denoiser {
public:
    virtual ~Denoiser() = default;
    // Predicted noise; must be a pure function of its arguments.
    virtual ScalarVolume predict(const ScalarVolume &x_t, int t, const NoiseSchedule &sched, const Mask *m) const = 0;
    virtual std::string name() const = 0;
};

// Exact noise prediction for a voxelwise Gaussian prior x0 ~ N(mu, var).
std::unique_ptr<Denoiser> gaussian_analytic_denoiser(ScalarVolume mu, double var);

// x0 estimate = box mean of x_t / sqrt(abar_t), radius >= 1.
std::unique_ptr<Denoiser> neighborhood_denoiser(int radius);

// One ancestral step from t to t-1. With z == nullptr the stochastic term is
// omitted (mean-only update). No noise is added at t = 1.
ScalarVolume reverse_step(const ScalarVolume &x_t, int t, const Denoiser &denoiser, const NoiseSchedule &sched,
                          const ScalarVolume *z, const Mask *m = nullptr);

enum class InpaintMode { paper_clean_known, repaint_noised_known };

const char *to_string(InpaintMode mode);
InpaintMode inpaint_mode_from_string(const std::string &s);

struct InpaintConfig {
    InpaintMode mode = InpaintMode::paper_clean_known;
    NoiseSchedule schedule = default_schedule(50);
    std::uint64_t seed = 0;
    int resample_jumps = 0;
};

// Masked reverse diffusion. Voxels outside m are returned bitwise equal to
// x0_known.
ScalarVolume inpaint_sample(const ScalarVolume &x0_known, const Mask &m, const Denoiser &denoiser, const InpaintConfig &cfg);

// Standard-normal field keyed by (seed, purpose, t, jump, voxel).
ScalarVolume gaussian_field(const GridGeometry &g, std::uint64_t seed, std::uint64_t purpose, int t, int jump);

class HarmonicNonConvergence : public std::runtime_error {
public:
    HarmonicNonConvergence(double residual, int iterations);
    double residual() const { return residual_; }
    int iterations() const { return iterations_; }

private:
    double residual_;
    int iterations_;
};

struct HarmonicResult {
    ScalarVolume volume;
    double residual = 0.0;
    int iterations = 0;
};

// Discrete Laplace equation inside m with Dirichlet data from the complement,
// solved by red-black SOR until the max residual is <= tol. Grid faces are
// reflecting (only in-grid neighbours count).
HarmonicResult harmonic_inpaint_detailed(const ScalarVolume &vol, const Mask &m, double tol = 1e-6, int max_iter = 20000);
ScalarVolume harmonic_inpaint(const ScalarVolume &vol, const Mask &m, double tol = 1e-6, int max_iter = 20000);

// Max over m of |sum of in-grid neighbours - count * value|.
double harmonic_residual(const ScalarVolume &vol, const Mask &m);

} // namespace lesionrev
