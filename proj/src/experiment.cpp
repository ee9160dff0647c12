#include "lesionrev/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <fstream>

#include "lesionrev/json_util.hpp"
#include "lesionrev/morphology.hpp"
#include "lesionrev/parallel.hpp"
#include "lesionrev/rng.hpp"
#include "lesionrev/volume_ops.hpp"

namespace lesionrev {

namespace {

constexpr std::uint64_t kPoolStream = 0xE001;
constexpr std::uint64_t kHoldoutStream = 0xE002;
constexpr std::uint64_t kCaseStream = 0xE003;
constexpr std::uint64_t kSiteStream = 0xE004;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

nlohmann::json to_json(const RunConfig &c) {
    return {{"seed", c.seed},
            {"threads", c.threads},
            {"phantom", to_json(c.phantom)},
            {"subject", to_json(c.subject)},
            {"cohort", {{"subjects", c.cohort.subjects}, {"holdout", c.cohort.holdout}}},
            {"synthesis", to_json(c.synthesis)},
            {"registration", to_json(c.registration)},
            {"pool_region", to_string(c.pool_region)},
            {"segmentation", to_json(c.segmentation)},
            {"inpainter", to_json(c.inpainter)},
            {"experiment",
             {{"cases", c.experiment.cases},
              {"perilesional_distance", c.experiment.perilesional_distance},
              {"site_attempts", c.experiment.site_attempts}}}};
}

RunConfig run_config_from_json(const nlohmann::json &j) {
    RunConfig c;
    try {
        StrictObject o(j, "config");
        o.get("seed", c.seed);
        o.get("threads", c.threads);
        if (const auto *p = o.sub("phantom")) c.phantom = phantom_spec_from_json(*p);
        if (const auto *p = o.sub("subject")) c.subject = subject_params_from_json(*p);
        if (const auto *p = o.sub("cohort")) {
            StrictObject s(*p, "cohort");
            s.get("subjects", c.cohort.subjects);
            s.get("holdout", c.cohort.holdout);
            s.finish();
        }
        if (const auto *p = o.sub("synthesis")) c.synthesis = synth_params_from_json(*p);
        if (const auto *p = o.sub("registration")) c.registration = reg_params_from_json(*p);
        std::string region = to_string(c.pool_region);
        o.get("pool_region", region);
        c.pool_region = pool_region_from_string(region);
        if (const auto *p = o.sub("segmentation")) c.segmentation = segmentation_params_from_json(*p);
        if (const auto *p = o.sub("inpainter")) c.inpainter = inpainter_from_json(*p);
        if (const auto *p = o.sub("experiment")) {
            StrictObject s(*p, "experiment");
            s.get("cases", c.experiment.cases);
            s.get("perilesional_distance", c.experiment.perilesional_distance);
            s.get("site_attempts", c.experiment.site_attempts);
            s.finish();
        }
        o.finish();
    } catch (const ConfigError &) {
        throw;
    } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what());
    }
    if (c.threads < 0) throw ConfigError("config.threads must be >= 0");
    if (c.cohort.subjects < 5) throw ConfigError("cohort.subjects must be >= 5");
    if (c.cohort.holdout < 0) throw ConfigError("cohort.holdout must be >= 0");
    if (c.experiment.cases < 0) throw ConfigError("experiment.cases must be >= 0");
    if (!(c.experiment.perilesional_distance > 0.0)) throw ConfigError("experiment.perilesional_distance must be > 0");
    if (c.experiment.site_attempts < 1) throw ConfigError("experiment.site_attempts must be >= 1");
    return c;
}

RunConfig load_run_config(const std::filesystem::path &path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot read config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error &e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return run_config_from_json(j);
}

std::uint64_t pool_subject_seed(const RunConfig &c, int i) { return hash_key(c.seed, kPoolStream, static_cast<std::uint64_t>(i)); }
std::uint64_t holdout_subject_seed(const RunConfig &c, int i) { return hash_key(c.seed, kHoldoutStream, static_cast<std::uint64_t>(i)); }
std::uint64_t case_subject_seed(const RunConfig &c, int i) { return hash_key(c.seed, kCaseStream, static_cast<std::uint64_t>(i)); }

NormativeJacobianPool build_cohort_pool(const Phantom &atlas, const RunConfig &c) {
    std::vector<ScalarVolume> subjects;
    nlohmann::json seeds = nlohmann::json::array();
    for (int i = 0; i < c.cohort.subjects; ++i) {
        const auto seed = pool_subject_seed(c, i);
        subjects.push_back(make_subject(atlas, seed, c.subject).image);
        seeds.push_back(seed);
    }
    return build_normative_pool(atlas.image, subjects, c.registration, {{"seeds", seeds}, {"subject", to_json(c.subject)}}, c.pool_region);
}

GeneratedCase generate_case(const Phantom &atlas, const RunConfig &c, int i) {
    GeneratedCase out{make_subject(atlas, case_subject_seed(c, i), c.subject), {}};
    const auto inner = innermost_labels(c.phantom);
    Mask placement(atlas.image.geometry());
    std::vector<std::size_t> sites;
    for (std::size_t k = 0; k < placement.size(); ++k) {
        if (std::find(inner.begin(), inner.end(), out.subject.labels[k]) == inner.end()) continue;
        placement[k] = 1;
        sites.push_back(k);
    }
    if (sites.empty()) throw std::runtime_error("generate_case: subject has no innermost-shell voxels");
    CounterRng rng(c.seed, kSiteStream + static_cast<std::uint64_t>(i) * 0x100);
    const auto &g = placement.geometry();
    for (int attempt = 0; attempt < c.experiment.site_attempts; ++attempt) {
        const auto k = sites[static_cast<std::size_t>(rng.next_u64() % sites.size())];
        const auto xyz = g.coords(k);
        SynthParams p = c.synthesis;
        p.p_lesion = Vec3(xyz[0], xyz[1], xyz[2]);
        p.seed = hash_key(c.seed, kSiteStream, static_cast<std::uint64_t>(i));
        try {
            out.synth = synthesize_lesion(out.subject.image, p, &placement);
            return out;
        } catch (const PlacementError &) {
        }
    }
    throw std::runtime_error("generate_case: no feasible lesion site after " + std::to_string(c.experiment.site_attempts) + " attempts");
}

namespace {

std::vector<std::int32_t> labels_in_region(const LabelVolume &labels, const Mask &region) {
    std::vector<std::int32_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto l = labels[i];
        if (!region[i] || l == 0 || l == kLesionLabel) continue;
        if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
    }
    std::sort(out.begin(), out.end());
    return out;
}

double max_value(const ScalarVolume &v) {
    double m = 0.0;
    for (double x : v.data()) m = std::max(m, x);
    return m;
}

} // namespace

CaseOutcome evaluate_case(const Phantom &atlas, const NormativeJacobianPool &pool, const RunConfig &c, const std::string &id,
                          const SynthCase &sc) {
    const auto t0 = std::chrono::steady_clock::now();
    CaseOutcome o;
    o.id = id;
    o.p_lesion = sc.params.p_lesion;
    const ReversalResult r = reverse_pipeline(sc.lesioned, atlas.image, pool, c.reversal());
    o.segmentation_empty = r.segmentation.empty;
    o.segmentation_dice = dice(r.lesion_mask, sc.final_mask);
    o.core_dice = dice(r.core_mask, sc.core_mask);
    o.core_volume_ratio = static_cast<double>(count_nonzero(r.core_mask)) / static_cast<double>(count_nonzero(sc.core_mask));
    o.nmse_lesioned = nmse(sc.lesioned, sc.healthy);
    o.nmse_estimate = nmse(r.healthy_estimate, sc.healthy);
    SsimParams sp;
    sp.data_range = max_value(sc.healthy);
    o.ssim_lesioned = ssim3d(sc.lesioned, sc.healthy, sp);
    o.ssim_estimate = ssim3d(r.healthy_estimate, sc.healthy, sp);

    const LabelResult gt = label_groundtruth(sc, atlas.image, atlas.labels, c.registration);
    // The segmentation registration is the baseline's atlas -> lesioned registration.
    const LabelResult base{warp(atlas.labels, r.segmentation.displacement), r.segmentation.displacement};
    const LabelResult prop = label_proposed(r, atlas.image, atlas.labels, c.registration);

    const auto rois = roi_labels(c.phantom);
    o.dice_baseline = mean_dice(base.labels, gt.labels, rois);
    o.dice_proposed = mean_dice(prop.labels, gt.labels, rois);
    for (auto l : rois) {
        o.roi_baseline.emplace_back(l, dice(base.labels, gt.labels, l));
        o.roi_proposed.emplace_back(l, dice(prop.labels, gt.labels, l));
    }
    const Mask peri = within_distance(sc.final_mask, c.experiment.perilesional_distance);
    const auto peri_labels = labels_in_region(gt.labels, peri);
    o.dice_baseline_peri = mean_dice(base.labels, gt.labels, peri_labels, peri);
    o.dice_proposed_peri = mean_dice(prop.labels, gt.labels, peri_labels, peri);
    o.field_nmse_baseline = field_nmse(base.chain, gt.chain);
    o.field_nmse_proposed = field_nmse(prop.chain, gt.chain);
    o.runtime_seconds = seconds_since(t0);
    return o;
}

HealthyOutcome evaluate_healthy(const Phantom &atlas, const NormativeJacobianPool &pool, const RunConfig &c, const std::string &id,
                                const ScalarVolume &healthy) {
    const Segmentation s = segment_lesion(healthy, atlas.image, pool, c.segmentation, c.registration);
    const auto brain = count_nonzero(threshold_mask(healthy, 0.0));
    return {id, static_cast<double>(count_nonzero(s.mask)) / static_cast<double>(brain)};
}

std::vector<ReportRow> case_rows(const CaseOutcome &o) {
    std::vector<ReportRow> rows{
        {o.id, "segmentation_dice", "whole", o.segmentation_dice},
        {o.id, "core_dice", "whole", o.core_dice},
        {o.id, "core_volume_ratio", "whole", o.core_volume_ratio},
        {o.id, "nmse_lesioned", "whole", o.nmse_lesioned},
        {o.id, "nmse_estimate", "whole", o.nmse_estimate},
        {o.id, "ssim_lesioned", "whole", o.ssim_lesioned},
        {o.id, "ssim_estimate", "whole", o.ssim_estimate},
        {o.id, "dice_baseline", "whole", o.dice_baseline},
        {o.id, "dice_proposed", "whole", o.dice_proposed},
        {o.id, "dice_baseline", "perilesional", o.dice_baseline_peri},
        {o.id, "dice_proposed", "perilesional", o.dice_proposed_peri},
    };
    for (const auto &[l, d] : o.roi_baseline) rows.push_back({o.id, "dice_baseline", "roi:" + std::to_string(l), d});
    for (const auto &[l, d] : o.roi_proposed) rows.push_back({o.id, "dice_proposed", "roi:" + std::to_string(l), d});
    rows.push_back({o.id, "field_nmse_baseline", "whole", o.field_nmse_baseline});
    rows.push_back({o.id, "field_nmse_proposed", "whole", o.field_nmse_proposed});
    return rows;
}

namespace {

// Runs f(i) for i in [0, n), in parallel over `threads` when > 1. Every index
// writes its own slot; the first failure by index is rethrown.
template <class F>
void for_each_index(int n, int threads, F &&f) {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    if (threads > 1) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
        for (int i = 0; i < n; ++i) {
            try {
                f(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    } else {
        for (int i = 0; i < n; ++i) f(i);
    }
    for (auto &e : errors)
        if (e) std::rethrow_exception(e);
}

std::string numbered(const char *prefix, int i) {
    std::string s = std::to_string(i);
    if (s.size() < 2) s = "0" + s;
    return std::string(prefix) + s;
}

} // namespace

ExperimentResult run_experiment(const RunConfig &c, const Progress &progress) {
    auto say = [&](const std::string &msg) {
        if (!progress) return;
#pragma omp critical(lesionrev_progress)
        progress(msg);
    };
    ExperimentResult res;
    auto t0 = std::chrono::steady_clock::now();
    const Phantom atlas = make_phantom(c.phantom);
    say("building normative pool from " + std::to_string(c.cohort.subjects) + " subjects");
    res.pool = build_cohort_pool(atlas, c);
    const NormativeJacobianPool &pool = res.pool;
    res.pool_band = {pool.percentile(c.segmentation.lower_pct), pool.percentile(c.segmentation.upper_pct)};
    res.timing["pool"] = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    res.healthy.resize(static_cast<std::size_t>(c.cohort.holdout));
    for_each_index(c.cohort.holdout, c.threads, [&](int i) {
        const auto s = make_subject(atlas, holdout_subject_seed(c, i), c.subject);
        res.healthy[static_cast<std::size_t>(i)] = evaluate_healthy(atlas, pool, c, numbered("healthy_", i), s.image);
        say("held-out subject " + std::to_string(i) + " done");
    });
    res.timing["holdout"] = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    res.cases.resize(static_cast<std::size_t>(c.experiment.cases));
    for_each_index(c.experiment.cases, c.threads, [&](int i) {
        const auto gc = generate_case(atlas, c, i);
        res.cases[static_cast<std::size_t>(i)] = evaluate_case(atlas, pool, c, numbered("case_", i), gc.synth);
        say("case " + std::to_string(i) + " done");
    });
    res.timing["cases"] = seconds_since(t0);
    nlohmann::json per_case = nlohmann::json::object();
    for (const auto &o : res.cases) per_case[o.id] = o.runtime_seconds;
    res.timing["per_case"] = per_case;

    for (const auto &h : res.healthy) res.report.rows.push_back({h.id, "false_positive_fraction", "whole", h.false_positive_fraction});
    for (const auto &o : res.cases) {
        auto rows = case_rows(o);
        res.report.rows.insert(res.report.rows.end(), rows.begin(), rows.end());
    }
    res.report.seed = c.seed;
    res.report.tool_version = LESIONREV_VERSION;
    res.report.config = to_json(c);
    // The thread count does not change results, so it stays out of the echo.
    res.report.config.erase("threads");
    return res;
}

} // namespace lesionrev
