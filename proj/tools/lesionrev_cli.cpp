#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lesionrev/experiment.hpp"
#include "lesionrev/field_io.hpp"
#include "lesionrev/nifti.hpp"
#include "lesionrev/parallel.hpp"
#include "lesionrev/reversal.hpp"
#include "lesionrev/volume_ops.hpp"

namespace fs = std::filesystem;
using namespace lesionrev;
using nlohmann::json;

namespace {

enum ExitCode { ok = 0, other_error = 1, config_error = 2, input_error = 3, numerical_error = 4 };

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> threads;
    bool json_summary = false;
};

// Output directory written under a temporary name and renamed into place on
// commit. An uncommitted directory is removed.
class StagedDir {
public:
    explicit StagedDir(const fs::path &final_path) : final_(final_path) {
        if (final_.empty()) throw ConfigError("--out is required");
        const fs::path parent = final_.has_parent_path() ? final_.parent_path() : fs::path(".");
        fs::create_directories(parent);
        std::random_device rd;
        tmp_ = parent / ("." + final_.filename().string() + ".tmp-" + std::to_string(rd()));
        fs::create_directories(tmp_);
    }
    ~StagedDir() {
        std::error_code ec;
        if (!committed_) fs::remove_all(tmp_, ec);
    }
    StagedDir(const StagedDir &) = delete;
    StagedDir &operator=(const StagedDir &) = delete;

    const fs::path &path() const { return tmp_; }
    const fs::path &final_path() const { return final_; }

    void commit() {
        std::error_code ec;
        if (fs::exists(final_)) {
            const fs::path old = final_.string() + ".old";
            fs::remove_all(old, ec);
            fs::rename(final_, old);
            fs::rename(tmp_, final_);
            fs::remove_all(old, ec);
        } else {
            fs::rename(tmp_, final_);
        }
        committed_ = true;
    }

    std::vector<std::string> files() const {
        std::vector<std::string> out;
        for (const auto &e : fs::directory_iterator(committed_ ? final_ : tmp_)) out.push_back(e.path().filename().string());
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    fs::path final_, tmp_;
    bool committed_ = false;
};

void write_json(const json &j, const fs::path &p) {
    std::ofstream os(p, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << j.dump(2) << "\n";
}

json read_json(const fs::path &p) {
    std::ifstream is(p);
    if (!is) throw InputError("cannot read " + p.string());
    try {
        return json::parse(is);
    } catch (const json::parse_error &e) {
        throw InputError(p.string() + ": " + e.what());
    }
}

void require_file(const fs::path &p) {
    if (!fs::exists(p)) throw InputError("missing input: " + p.string());
}

ScalarVolume load_scalar(const fs::path &p) {
    require_file(p);
    try {
        return read_nifti_scalar(p);
    } catch (const NiftiError &e) {
        throw InputError(p.string() + ": " + e.what());
    }
}

LabelVolume load_labels(const fs::path &p) {
    require_file(p);
    try {
        return read_nifti_labels(p);
    } catch (const NiftiError &e) {
        throw InputError(p.string() + ": " + e.what());
    }
}

Mask load_mask(const fs::path &p) {
    require_file(p);
    try {
        return read_nifti_mask(p);
    } catch (const NiftiError &e) {
        throw InputError(p.string() + ": " + e.what());
    }
}

VectorField load_field(const fs::path &dir, const std::string &stem, std::optional<FieldKind> kind = std::nullopt) {
    try {
        return read_field(dir, stem, kind);
    } catch (const NiftiError &e) {
        throw InputError(e.what());
    } catch (const std::runtime_error &e) {
        throw InputError(e.what());
    }
}

RunConfig resolve_config(const Globals &g) {
    RunConfig c = g.config_path.empty() ? RunConfig{} : load_run_config(g.config_path);
    if (g.seed) c.seed = *g.seed;
    if (g.threads) {
        if (*g.threads < 0) throw ConfigError("--threads must be >= 0");
        c.threads = *g.threads;
    }
    if (c.threads == 0) {
        if (const char *env = std::getenv("LESIONREV_THREADS")) {
            try {
                c.threads = std::stoi(env);
            } catch (const std::exception &) {
                throw ConfigError(std::string("LESIONREV_THREADS is not an integer: ") + env);
            }
            if (c.threads < 0) throw ConfigError("LESIONREV_THREADS must be >= 0");
        }
    }
    if (c.threads > 0) set_threads(c.threads);
    return c;
}

void progress(const std::string &msg) { std::cerr << "[lesionrev] " << msg << "\n"; }

// Atlas image and labels: from files when given, otherwise the configured phantom.
Phantom load_atlas(const RunConfig &c, const std::string &atlas, const std::string &atlas_labels) {
    if (atlas.empty() && atlas_labels.empty()) return make_phantom(c.phantom);
    if (atlas.empty()) throw ConfigError("--atlas-labels given without --atlas");
    Phantom p{load_scalar(atlas), LabelVolume{}};
    if (!atlas_labels.empty()) {
        p.labels = load_labels(atlas_labels);
        if (p.labels.geometry() != p.image.geometry()) throw InputError("atlas and atlas labels differ in geometry");
    }
    return p;
}

struct Context {
    Globals g;
    json summary = json::object();
};

void finish(Context &ctx, StagedDir &dir, const char *command, const RunConfig *c, json extra = json::object()) {
    if (c) write_json(to_json(*c), dir.path() / "config.json");
    dir.commit();
    ctx.summary = std::move(extra);
    ctx.summary["command"] = command;
    ctx.summary["out"] = dir.final_path().string();
    ctx.summary["files"] = dir.files();
}

// --- commands --------------------------------------------------------------

void cmd_phantom(Context &ctx) {
    const RunConfig c = resolve_config(ctx.g);
    StagedDir dir(ctx.g.out);
    progress("generating phantom");
    const Phantom p = make_phantom(c.phantom);
    write_nifti(p.image, dir.path() / "atlas.nii");
    write_nifti(p.labels, dir.path() / "atlas_labels.nii");
    finish(ctx, dir, "phantom", &c, {{"labels", label_set(p.labels)}});
}

void cmd_cohort(Context &ctx, int count) {
    RunConfig c = resolve_config(ctx.g);
    if (count > 0) c.cohort.subjects = count;
    StagedDir dir(ctx.g.out);
    const Phantom atlas = make_phantom(c.phantom);
    json seeds = json::array();
    for (int i = 0; i < c.cohort.subjects; ++i) {
        const auto seed = pool_subject_seed(c, i);
        progress("subject " + std::to_string(i));
        const Subject s = make_subject(atlas, seed, c.subject);
        char stem[32];
        std::snprintf(stem, sizeof stem, "subject_%02d", i);
        write_nifti(s.image, dir.path() / (std::string(stem) + ".nii"));
        write_nifti(s.labels, dir.path() / (std::string(stem) + "_labels.nii"));
        write_field(s.velocity, dir.path(), std::string(stem) + "_velocity", c.subject.exp_steps);
        seeds.push_back(seed);
    }
    write_json({{"seeds", seeds}}, dir.path() / "cohort.json");
    finish(ctx, dir, "cohort", &c, {{"subjects", c.cohort.subjects}});
}

void cmd_synth(Context &ctx, const std::string &healthy_path, const std::vector<double> &p, std::optional<double> severity,
               std::optional<double> contrast) {
    RunConfig c = resolve_config(ctx.g);
    if (severity) c.synthesis.severity = *severity;
    if (contrast) c.synthesis.contrast = *contrast;
    try {
        c.synthesis.validate();
    } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what());
    }
    SynthCase sc;
    if (p.empty()) {
        // Case 0 of the experiment: generated subject, sampled site.
        if (!healthy_path.empty()) throw ConfigError("--healthy requires --p");
        sc = generate_case(make_phantom(c.phantom), c, 0).synth;
    } else {
        SynthParams sp = c.synthesis;
        sp.p_lesion = {p[0], p[1], p[2]};
        const ScalarVolume healthy =
            healthy_path.empty() ? make_subject(make_phantom(c.phantom), case_subject_seed(c, 0), c.subject).image : load_scalar(healthy_path);
        sc = synthesize_lesion(healthy, sp);
    }
    StagedDir dir(ctx.g.out);
    write_nifti(sc.healthy, dir.path() / "healthy.nii");
    write_nifti(sc.core_image, dir.path() / "core.nii");
    write_nifti(sc.lesioned, dir.path() / "lesioned.nii");
    write_nifti(sc.core_mask, dir.path() / "core_mask.nii");
    write_nifti(sc.final_mask, dir.path() / "final_mask.nii");
    write_field_components(sc.gt_velocity, dir.path(), "gt_velocity");
    json params = {{"synthesis", to_json(sc.params)},
                   {"gt_velocity", field_sidecar(sc.gt_velocity, sc.params.reg.exp_steps)},
                   {"registration_dice", sc.registration_dice},
                   {"expansion_dice", sc.expansion_dice},
                   {"config", to_json(c)}};
    write_json(params, dir.path() / "params.json");
    // The resolved config lives in params.json so the case stays at nine files.
    finish(ctx, dir, "synth", nullptr, {{"p_lesion", {sc.params.p_lesion.x, sc.params.p_lesion.y, sc.params.p_lesion.z}},
                                        {"expansion_dice", sc.expansion_dice}});
}

SynthCase load_case(const fs::path &dir) {
    const json params = read_json(dir / "params.json");
    SynthCase sc;
    try {
        sc.params = synth_params_from_json(params.at("synthesis"));
    } catch (const std::exception &e) {
        throw InputError("params.json: " + std::string(e.what()));
    }
    sc.healthy = load_scalar(dir / "healthy.nii");
    sc.core_image = load_scalar(dir / "core.nii");
    sc.lesioned = load_scalar(dir / "lesioned.nii");
    sc.core_mask = load_mask(dir / "core_mask.nii");
    sc.final_mask = load_mask(dir / "final_mask.nii");
    sc.gt_velocity = load_field(dir, "gt_velocity", FieldKind::velocity);
    sc.gt_displacement = exp_velocity(sc.gt_velocity, sc.params.reg.exp_steps);
    return sc;
}

void cmd_normative(Context &ctx, const std::string &atlas_path, const std::vector<std::string> &subjects) {
    const RunConfig c = resolve_config(ctx.g);
    StagedDir dir(ctx.g.out);
    NormativeJacobianPool pool;
    if (subjects.empty()) {
        if (!atlas_path.empty()) throw ConfigError("--atlas requires --subjects");
        progress("building pool from " + std::to_string(c.cohort.subjects) + " generated subjects");
        pool = build_cohort_pool(make_phantom(c.phantom), c);
    } else {
        const Phantom atlas = load_atlas(c, atlas_path, "");
        std::vector<ScalarVolume> imgs;
        for (const auto &s : subjects) imgs.push_back(load_scalar(s));
        json names = json::array();
        for (const auto &s : subjects) names.push_back(fs::path(s).filename().string());
        try {
            pool = build_normative_pool(atlas.image, imgs, c.registration, {{"subjects", names}}, c.pool_region);
        } catch (const std::invalid_argument &e) {
            throw InputError(e.what());
        }
    }
    pool.save(dir.path());
    finish(ctx, dir, "normative", &c,
           {{"samples", pool.size()},
            {"lower", pool.percentile(c.segmentation.lower_pct)},
            {"upper", pool.percentile(c.segmentation.upper_pct)}});
}

NormativeJacobianPool load_pool(const std::string &dir) {
    require_file(fs::path(dir) / "pool.bin");
    try {
        return NormativeJacobianPool::load(dir);
    } catch (const std::exception &e) {
        throw InputError(std::string("pool: ") + e.what());
    }
}

void cmd_register(Context &ctx, const std::string &moving, const std::string &fixed, std::optional<double> lambda_bend,
                  std::optional<double> lambda_div, std::optional<int> iterations) {
    RunConfig c = resolve_config(ctx.g);
    if (lambda_bend) c.registration.lambda_bend = *lambda_bend;
    if (lambda_div) c.registration.lambda_div = *lambda_div;
    if (iterations) c.registration.iterations = *iterations;
    try {
        c.registration.validate();
    } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what());
    }
    const ScalarVolume m = load_scalar(moving), f = load_scalar(fixed);
    if (m.geometry() != f.geometry()) throw InputError("moving and fixed differ in geometry");
    const RegResult r = register_images(m, f, c.registration);
    StagedDir dir(ctx.g.out);
    write_field(r.velocity, dir.path(), "velocity", c.registration.exp_steps);
    write_nifti(warp(m, r.displacement), dir.path() / "warped.nii");
    write_nifti(jacobian_determinant(r.displacement), dir.path() / "jacobian.nii");
    write_json(loss_trace_json(r), dir.path() / "loss.json");
    const auto &last = r.loss_trace.back().terms;
    finish(ctx, dir, "register", &c, {{"converged", r.converged}, {"final_loss", last.total}, {"final_data", last.data}});
}

void cmd_inpaint(Context &ctx, const std::string &image, const std::string &mask, const std::string &kind) {
    RunConfig c = resolve_config(ctx.g);
    if (!kind.empty()) {
        try {
            c.inpainter.kind = inpainter_kind_from_string(kind);
        } catch (const std::invalid_argument &e) {
            throw ConfigError(e.what());
        }
    }
    const ScalarVolume img = load_scalar(image);
    const Mask m = load_mask(mask);
    if (img.geometry() != m.geometry()) throw InputError("image and mask differ in geometry");
    const ScalarVolume out = run_inpainter(img, m, c.inpainter);
    StagedDir dir(ctx.g.out);
    write_nifti(out, dir.path() / "inpainted.nii");
    finish(ctx, dir, "inpaint", &c, {{"masked_voxels", count_nonzero(m)}, {"inpainter", to_string(c.inpainter.kind)}});
}

void cmd_segment(Context &ctx, const std::string &lesioned, const std::string &pool_dir, const std::string &atlas_path) {
    const RunConfig c = resolve_config(ctx.g);
    const ScalarVolume img = load_scalar(lesioned);
    const NormativeJacobianPool pool = load_pool(pool_dir);
    const Phantom atlas = load_atlas(c, atlas_path, "");
    if (img.geometry() != atlas.image.geometry()) throw InputError("lesioned and atlas differ in geometry");
    const Segmentation s = segment_lesion(img, atlas.image, pool, c.segmentation, c.registration);
    if (s.empty) progress("warning: segmentation is empty after morphology");
    StagedDir dir(ctx.g.out);
    write_nifti(s.mask, dir.path() / "lesion_mask.nii");
    write_nifti(s.jacobian, dir.path() / "jacobian.nii");
    const json meta = {{"lower", s.lower}, {"upper", s.upper}, {"raw_voxels", count_nonzero(s.raw)}, {"voxels", count_nonzero(s.mask)},
                       {"empty", s.empty}, {"registration", loss_trace_json(s.registration)}};
    write_json(meta, dir.path() / "segmentation.json");
    finish(ctx, dir, "segment", &c, {{"voxels", count_nonzero(s.mask)}, {"empty", s.empty}});
}

void cmd_reverse(Context &ctx, const std::string &lesioned, const std::string &pool_dir, const std::string &atlas_path) {
    const RunConfig c = resolve_config(ctx.g);
    const ScalarVolume img = load_scalar(lesioned);
    const NormativeJacobianPool pool = load_pool(pool_dir);
    const Phantom atlas = load_atlas(c, atlas_path, "");
    if (img.geometry() != atlas.image.geometry()) throw InputError("lesioned and atlas differ in geometry");
    const ReversalResult r = reverse_pipeline(img, atlas.image, pool, c.reversal());
    if (r.segmentation.empty) progress("warning: segmentation is empty; input treated as healthy");
    StagedDir dir(ctx.g.out);
    write_nifti(r.lesion_mask, dir.path() / "lesion_mask.nii");
    write_nifti(r.inpainted_lesioned, dir.path() / "inpainted_lesioned.nii");
    write_nifti(r.core_image, dir.path() / "core.nii");
    write_nifti(r.core_mask, dir.path() / "core_mask.nii");
    write_field(r.velocity_b, dir.path(), "velocity_b", c.registration.exp_steps);
    write_nifti(r.healthy_estimate, dir.path() / "healthy_estimate.nii");
    write_json(r.metadata, dir.path() / "metadata.json");
    finish(ctx, dir, "reverse", &c,
           {{"lesion_voxels", count_nonzero(r.lesion_mask)}, {"core_voxels", count_nonzero(r.core_mask)}, {"empty", r.segmentation.empty}});
}

void cmd_label(Context &ctx, const std::string &method, const std::string &case_dir, const std::string &lesioned,
               const std::string &reversal_dir, const std::string &atlas_path, const std::string &atlas_labels) {
    const RunConfig c = resolve_config(ctx.g);
    const Phantom atlas = load_atlas(c, atlas_path, atlas_labels);
    if (atlas.labels.size() == 0) throw ConfigError("--atlas requires --atlas-labels for labeling");
    LabelResult out;
    if (method == "groundtruth") {
        if (case_dir.empty()) throw ConfigError("groundtruth labeling needs --case");
        const SynthCase sc = load_case(case_dir);
        if (sc.healthy.geometry() != atlas.image.geometry()) throw InputError("case and atlas differ in geometry");
        out = label_groundtruth(sc, atlas.image, atlas.labels, c.registration);
    } else if (method == "baseline") {
        if (lesioned.empty()) throw ConfigError("baseline labeling needs --lesioned");
        const ScalarVolume img = load_scalar(lesioned);
        if (img.geometry() != atlas.image.geometry()) throw InputError("lesioned and atlas differ in geometry");
        out = label_baseline(img, atlas.image, atlas.labels, c.registration);
    } else if (method == "proposed") {
        if (reversal_dir.empty()) throw ConfigError("proposed labeling needs --reversal");
        ReversalResult r;
        const fs::path d = reversal_dir;
        r.lesion_mask = load_mask(d / "lesion_mask.nii");
        r.healthy_estimate = load_scalar(d / "healthy_estimate.nii");
        r.velocity_b = load_field(d, "velocity_b");
        if (r.healthy_estimate.geometry() != atlas.image.geometry()) throw InputError("reversal outputs and atlas differ in geometry");
        out = label_proposed(r, atlas.image, atlas.labels, c.registration);
    } else {
        throw ConfigError("unknown labeling method: " + method);
    }
    StagedDir dir(ctx.g.out);
    write_nifti(out.labels, dir.path() / "labels.nii");
    write_field(out.chain, dir.path(), "chain", c.registration.exp_steps);
    finish(ctx, dir, "label", &c, {{"method", method}, {"labels", label_set(out.labels)}});
}

void cmd_eval(Context &ctx, std::optional<int> cases, std::optional<int> subjects) {
    RunConfig c = resolve_config(ctx.g);
    if (cases) c.experiment.cases = *cases;
    if (subjects) c.cohort.subjects = *subjects;
    if (c.experiment.cases < 0 || c.cohort.subjects < 5) throw ConfigError("need cases >= 0 and subjects >= 5");
    const ExperimentResult r = run_experiment(c, progress);
    StagedDir dir(ctx.g.out);
    emit_report(r.report, dir.path() / "report.csv", ReportFormat::csv);
    emit_report(r.report, dir.path() / "report.json", ReportFormat::json);
    write_json(r.timing, dir.path() / "timing.json");

    int proposed_wins = 0, field_wins = 0, nmse_wins = 0, core_hits = 0;
    double whole_gain = 0.0, peri_gain = 0.0;
    for (const auto &o : r.cases) {
        proposed_wins += o.dice_proposed >= o.dice_baseline;
        field_wins += o.field_nmse_proposed <= o.field_nmse_baseline;
        nmse_wins += o.nmse_estimate <= o.nmse_lesioned;
        core_hits += o.core_dice >= 0.5;
        whole_gain += o.dice_proposed - o.dice_baseline;
        peri_gain += o.dice_proposed_peri - o.dice_baseline_peri;
    }
    const double n = r.cases.empty() ? 1.0 : static_cast<double>(r.cases.size());
    finish(ctx, dir, "eval", &c,
           {{"cases", r.cases.size()},
            {"proposed_at_least_baseline", proposed_wins},
            {"field_nmse_proposed_better", field_wins},
            {"nmse_improved", nmse_wins},
            {"core_dice_at_least_half", core_hits},
            {"mean_whole_gain", whole_gain / n},
            {"mean_perilesional_gain", peri_gain / n},
            {"timing", r.timing}});
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"lesionrev: lesion synthesis, reversal and labeling on synthetic brains"};
    app.require_subcommand(1);
    Context ctx;
    auto add_globals = [&](CLI::App *sub) {
        sub->add_option("--config", ctx.g.config_path, "JSON run configuration")->check(CLI::ExistingFile);
        sub->add_option("--seed", ctx.g.seed, "Global seed override");
        sub->add_option("--out", ctx.g.out, "Output directory (written atomically)");
        sub->add_option("--threads", ctx.g.threads, "Thread count (0: LESIONREV_THREADS or OpenMP default)");
        sub->add_flag("--json", ctx.g.json_summary, "Print a JSON summary to stdout");
    };

    std::function<void()> run;

    auto *phantom = app.add_subcommand("phantom", "Write the atlas phantom and its labels");
    add_globals(phantom);
    phantom->callback([&] { run = [&] { cmd_phantom(ctx); }; });

    int count = 0;
    auto *cohort = app.add_subcommand("cohort", "Write healthy subjects deformed from the atlas");
    add_globals(cohort);
    cohort->add_option("--count", count, "Number of subjects (default: cohort.subjects)");
    cohort->callback([&] { run = [&] { cmd_cohort(ctx, count); }; });

    std::string healthy;
    std::vector<double> p_lesion;
    std::optional<double> severity, contrast;
    auto *synth = app.add_subcommand("synth", "Synthesize one lesioned case");
    add_globals(synth);
    synth->add_option("--healthy", healthy, "Healthy image (default: generated subject)");
    synth->add_option("--p", p_lesion, "Lesion centre x y z in voxels (default: sampled)")->expected(3);
    synth->add_option("--severity", severity, "Deformation severity");
    synth->add_option("--contrast", contrast, "Core intensity multiplier");
    synth->callback([&] { run = [&] { cmd_synth(ctx, healthy, p_lesion, severity, contrast); }; });

    std::string atlas, atlas_labels;
    std::vector<std::string> subjects;
    auto *normative = app.add_subcommand("normative", "Build the normative Jacobian pool");
    add_globals(normative);
    normative->add_option("--atlas", atlas, "Atlas image (default: phantom)");
    normative->add_option("--subjects", subjects, "Healthy subject images (default: generated cohort)");
    normative->callback([&] { run = [&] { cmd_normative(ctx, atlas, subjects); }; });

    std::string moving, fixed;
    std::optional<double> lambda_bend, lambda_div;
    std::optional<int> iterations;
    auto *reg = app.add_subcommand("register", "Register moving onto fixed");
    add_globals(reg);
    reg->add_option("--moving", moving, "Moving image")->required();
    reg->add_option("--fixed", fixed, "Fixed image")->required();
    reg->add_option("--lambda-bend", lambda_bend, "Bending energy weight");
    reg->add_option("--lambda-div", lambda_div, "Divergence penalty weight");
    reg->add_option("--iterations", iterations, "Iterations per level");
    reg->callback([&] { run = [&] { cmd_register(ctx, moving, fixed, lambda_bend, lambda_div, iterations); }; });

    std::string image, mask, inpainter;
    auto *inpaint = app.add_subcommand("inpaint", "Inpaint an image inside a mask");
    add_globals(inpaint);
    inpaint->add_option("--image", image, "Image")->required();
    inpaint->add_option("--mask", mask, "Mask of voxels to fill")->required();
    inpaint->add_option("--inpainter", inpainter, "harmonic or diffusion");
    inpaint->callback([&] { run = [&] { cmd_inpaint(ctx, image, mask, inpainter); }; });

    std::string lesioned, pool_dir;
    auto *segment = app.add_subcommand("segment", "Segment a lesion by Jacobian thresholding");
    add_globals(segment);
    segment->add_option("--lesioned", lesioned, "Lesioned image")->required();
    segment->add_option("--pool", pool_dir, "Normative pool directory")->required();
    segment->add_option("--atlas", atlas, "Atlas image (default: phantom)");
    segment->callback([&] { run = [&] { cmd_segment(ctx, lesioned, pool_dir, atlas); }; });

    auto *reverse = app.add_subcommand("reverse", "Run the full reversal pipeline");
    add_globals(reverse);
    reverse->add_option("--lesioned", lesioned, "Lesioned image")->required();
    reverse->add_option("--pool", pool_dir, "Normative pool directory")->required();
    reverse->add_option("--atlas", atlas, "Atlas image (default: phantom)");
    reverse->callback([&] { run = [&] { cmd_reverse(ctx, lesioned, pool_dir, atlas); }; });

    std::string method, case_dir, reversal_dir;
    auto *label = app.add_subcommand("label", "Transfer atlas labels to a lesioned image");
    add_globals(label);
    label->add_option("--method", method, "groundtruth, baseline or proposed")->required();
    label->add_option("--case", case_dir, "Case directory from synth (groundtruth)");
    label->add_option("--lesioned", lesioned, "Lesioned image (baseline)");
    label->add_option("--reversal", reversal_dir, "Output directory of reverse (proposed)");
    label->add_option("--atlas", atlas, "Atlas image (default: phantom)");
    label->add_option("--atlas-labels", atlas_labels, "Atlas labels (default: phantom)");
    label->callback([&] { run = [&] { cmd_label(ctx, method, case_dir, lesioned, reversal_dir, atlas, atlas_labels); }; });

    std::optional<int> cases, n_subjects;
    auto *eval = app.add_subcommand("eval", "Run the synthetic labeling experiment and write the report");
    add_globals(eval);
    eval->add_option("--cases", cases, "Number of lesioned cases");
    eval->add_option("--subjects", n_subjects, "Number of pool subjects");
    eval->callback([&] { run = [&] { cmd_eval(ctx, cases, n_subjects); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        run();
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const InputError &e) {
        std::cerr << "input error: " << e.what() << "\n";
        return input_error;
    } catch (const NiftiError &e) {
        std::cerr << "input error: " << e.what() << "\n";
        return input_error;
    } catch (const fs::filesystem_error &e) {
        std::cerr << "input error: " << e.what() << "\n";
        return input_error;
    } catch (const std::invalid_argument &e) {
        std::cerr << "input error: " << e.what() << "\n";
        return input_error;
    } catch (const std::runtime_error &e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return numerical_error;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return other_error;
    }
    if (ctx.g.json_summary) std::cout << ctx.summary.dump() << "\n";
    return ok;
}
