#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lesionrev/metrics.hpp"
#include "lesionrev/reversal.hpp"
#include "lesionrev/synthesis.hpp"

namespace lesionrev {

// Bad or unknown configuration values.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Missing, unreadable or mutually inconsistent input artifacts.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CohortConfig {
    int subjects = 20;
    // Healthy subjects kept out of the pool for the false-positive check.
    int holdout = 2;
};

struct ExperimentConfig {
    int cases = 10;
    double perilesional_distance = 10.0;
    int site_attempts = 500;
};

struct RunConfig {
    std::uint64_t seed = 1;
    int threads = 0;
    PhantomSpec phantom;
    SubjectParams subject;
    CohortConfig cohort;
    SynthParams synthesis;
    RegParams registration;
    PoolRegion pool_region = PoolRegion::brain;
    SegmentationParams segmentation;
    Inpainter inpainter;
    ExperimentConfig experiment;

    ReversalConfig reversal() const { return {segmentation, registration, inpainter}; }
};

nlohmann::json to_json(const RunConfig &c);
// Strict: unknown keys and invalid values raise ConfigError.
RunConfig run_config_from_json(const nlohmann::json &j);
RunConfig load_run_config(const std::filesystem::path &path);

// Seeds of the generated subjects, all derived from the global seed.
std::uint64_t pool_subject_seed(const RunConfig &c, int i);
std::uint64_t holdout_subject_seed(const RunConfig &c, int i);
std::uint64_t case_subject_seed(const RunConfig &c, int i);

NormativeJacobianPool build_cohort_pool(const Phantom &atlas, const RunConfig &c);

struct GeneratedCase {
    Subject subject;
    SynthCase synth;
};

// Case i: a fresh subject with a lesion site drawn uniformly from its
// innermost-shell voxels, retried until the lesion fits.
GeneratedCase generate_case(const Phantom &atlas, const RunConfig &c, int i);

struct CaseOutcome {
    std::string id;
    Vec3 p_lesion;
    bool segmentation_empty = false;
    double segmentation_dice = 0.0;
    double core_dice = 0.0;
    double core_volume_ratio = 0.0;
    double nmse_lesioned = 0.0;
    double nmse_estimate = 0.0;
    double ssim_lesioned = 0.0;
    double ssim_estimate = 0.0;
    double dice_baseline = 0.0;
    double dice_proposed = 0.0;
    double dice_baseline_peri = 0.0;
    double dice_proposed_peri = 0.0;
    std::vector<std::pair<std::int32_t, double>> roi_baseline;
    std::vector<std::pair<std::int32_t, double>> roi_proposed;
    double field_nmse_baseline = 0.0;
    double field_nmse_proposed = 0.0;
    double runtime_seconds = 0.0;
};

struct HealthyOutcome {
    std::string id;
    double false_positive_fraction = 0.0;
};

// Reversal, the three labelings and every metric of one case.
CaseOutcome evaluate_case(const Phantom &atlas, const NormativeJacobianPool &pool, const RunConfig &c, const std::string &id,
                          const SynthCase &sc);

// Flagged fraction of the brain after morphology.
HealthyOutcome evaluate_healthy(const Phantom &atlas, const NormativeJacobianPool &pool, const RunConfig &c, const std::string &id,
                                const ScalarVolume &healthy);

struct ExperimentResult {
    std::vector<CaseOutcome> cases;
    std::vector<HealthyOutcome> healthy;
    NormativeJacobianPool pool;
    std::array<double, 2> pool_band{};
    EvalReport report;
    nlohmann::json timing = nlohmann::json::object();
};

using Progress = std::function<void(const std::string &)>;

// Cohort, pool, cases, reversal, three labelings and the report. Cases run in
// parallel over c.threads (0 keeps the current OpenMP setting); results do not
// depend on the thread count.
ExperimentResult run_experiment(const RunConfig &c, const Progress &progress = {});

std::vector<ReportRow> case_rows(const CaseOutcome &o);

} // namespace lesionrev
