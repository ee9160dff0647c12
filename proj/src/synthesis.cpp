#include "lesionrev/synthesis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "lesionrev/json_util.hpp"
#include "lesionrev/metrics.hpp"
#include "lesionrev/morphology.hpp"
#include "lesionrev/noise_geom.hpp"
#include "lesionrev/rng.hpp"
#include "lesionrev/volume_ops.hpp"

namespace lesionrev {

namespace {

constexpr std::uint64_t kShapeStream = 0x5A11;
constexpr std::uint64_t kModulationStream = 0x5A12;
constexpr std::uint64_t kSubjectStream = 0x5B01;
constexpr std::uint64_t kNoiseStream = 0x5B02;
constexpr std::uint64_t kFinalBlobStream = 0x5C01;

Vec3 grid_center(const GridGeometry &g) { return {(g.dims[0] - 1) / 2.0, (g.dims[1] - 1) / 2.0, (g.dims[2] - 1) / 2.0}; }

} // namespace

void PhantomSpec::validate() const {
    geometry.validate();
    if (n_shells() < 3) throw std::invalid_argument("PhantomSpec: need at least 3 shells including the background");
    if (radius_fractions.size() != intensities.size() - 1)
        throw std::invalid_argument("PhantomSpec: need one radius fraction per tissue shell");
    for (std::size_t i = 0; i < intensities.size(); ++i) {
        if (!std::isfinite(intensities[i])) throw std::invalid_argument("PhantomSpec: non-finite intensity");
        for (std::size_t j = 0; j < i; ++j)
            if (intensities[i] == intensities[j]) throw std::invalid_argument("PhantomSpec: intensities must be distinct");
    }
    if (intensities[0] != 0.0) throw std::invalid_argument("PhantomSpec: background intensity must be 0");
    for (std::size_t i = 1; i < intensities.size(); ++i)
        if (!(intensities[i] > 0.0)) throw std::invalid_argument("PhantomSpec: tissue intensities must be > 0");
    for (std::size_t i = 0; i < radius_fractions.size(); ++i) {
        if (!(radius_fractions[i] > 0.0 && radius_fractions[i] <= 1.0)) throw std::invalid_argument("PhantomSpec: radius fractions must be in (0, 1]");
        if (i > 0 && !(radius_fractions[i] < radius_fractions[i - 1]))
            throw std::invalid_argument("PhantomSpec: radius fractions must decrease");
    }
    if (!(boundary_amplitude >= 0.0 && boundary_amplitude < 0.5)) throw std::invalid_argument("PhantomSpec: boundary_amplitude must be in [0, 0.5)");
    if (!(boundary_frequency > 0.0)) throw std::invalid_argument("PhantomSpec: boundary_frequency must be > 0");
    if (!(modulation >= 0.0 && modulation < 0.5)) throw std::invalid_argument("PhantomSpec: modulation must be in [0, 0.5)");
    if (!(modulation_frequency > 0.0)) throw std::invalid_argument("PhantomSpec: modulation_frequency must be > 0");
    if (!(extent_fraction > 0.0)) throw std::invalid_argument("PhantomSpec: extent_fraction must be > 0");
    // The perturbed outer shell must stay one voxel clear of the faces.
    for (int a = 0; a < 3; ++a) {
        const double semi = extent_fraction * geometry.dims[a] * (1.0 + boundary_amplitude);
        if (semi > (geometry.dims[a] - 1) / 2.0 - 1.0) throw std::invalid_argument("PhantomSpec: shells exceed the grid");
    }
}

nlohmann::json to_json(const PhantomSpec &s) {
    return {{"dims", s.geometry.dims},
            {"spacing", s.geometry.spacing},
            {"origin", s.geometry.origin},
            {"intensities", s.intensities},
            {"radius_fractions", s.radius_fractions},
            {"extent_fraction", s.extent_fraction},
            {"boundary_amplitude", s.boundary_amplitude},
            {"boundary_frequency", s.boundary_frequency},
            {"modulation", s.modulation},
            {"modulation_frequency", s.modulation_frequency},
            {"seed", s.seed}};
}

PhantomSpec phantom_spec_from_json(const nlohmann::json &j, PhantomSpec base) {
    StrictObject o(j, "phantom");
    o.get("dims", base.geometry.dims);
    o.get("spacing", base.geometry.spacing);
    o.get("origin", base.geometry.origin);
    o.get("intensities", base.intensities);
    o.get("radius_fractions", base.radius_fractions);
    o.get("extent_fraction", base.extent_fraction);
    o.get("boundary_amplitude", base.boundary_amplitude);
    o.get("boundary_frequency", base.boundary_frequency);
    o.get("modulation", base.modulation);
    o.get("modulation_frequency", base.modulation_frequency);
    o.get("seed", base.seed);
    o.finish();
    base.validate();
    return base;
}

std::vector<std::int32_t> innermost_labels(const PhantomSpec &spec) {
    std::vector<std::int32_t> out;
    for (int k = 0; k < 8; ++k) out.push_back(spec.n_shells() - 1 + k);
    return out;
}

std::vector<std::int32_t> roi_labels(const PhantomSpec &spec) {
    std::vector<std::int32_t> out;
    for (int k = 1; k < spec.n_shells() - 1; ++k) out.push_back(k);
    for (auto l : innermost_labels(spec)) out.push_back(l);
    return out;
}

Phantom make_phantom(const PhantomSpec &spec) {
    spec.validate();
    const auto &g = spec.geometry;
    const Vec3 c = grid_center(g);
    const Vec3 semi{spec.extent_fraction * g.dims[0], spec.extent_fraction * g.dims[1], spec.extent_fraction * g.dims[2]};
    const PerlinTable shape(hash_key(spec.seed, kShapeStream, 0));
    const PerlinTable mod(hash_key(spec.seed, kModulationStream, 0));
    const double max_extent = std::max({g.dims[0], g.dims[1], g.dims[2]});
    const int n_tissue = spec.n_shells() - 1;
    Phantom p{ScalarVolume(g), LabelVolume(g)};
#pragma omp parallel for schedule(static)
    for (int z = 0; z < g.dims[2]; ++z) {
        for (int y = 0; y < g.dims[1]; ++y) {
            for (int x = 0; x < g.dims[0]; ++x) {
                const Vec3 q{(x - c.x) / semi.x, (y - c.y) / semi.y, (z - c.z) / semi.z};
                const double rho = norm(q);
                // One radial perturbation shared by all shells keeps them nested.
                const double bump = rho > 0.0 ? spec.boundary_amplitude * perlin3(shape, q * (1.0 / rho), spec.boundary_frequency) : 0.0;
                const double r = rho / (1.0 + bump);
                int shell = 0;
                for (int k = 0; k < n_tissue; ++k)
                    if (r <= spec.radius_fractions[static_cast<std::size_t>(k)]) shell = k + 1;
                if (shell == 0) continue;
                std::int32_t label = shell;
                if (shell == n_tissue) {
                    const int octant = (x > c.x ? 1 : 0) + (y > c.y ? 2 : 0) + (z > c.z ? 4 : 0);
                    label = n_tissue + octant;
                }
                const double m = 1.0 + spec.modulation * perlin3(mod, Vec3(x, y, z) * (1.0 / max_extent), spec.modulation_frequency);
                p.labels(x, y, z) = label;
                p.image(x, y, z) = spec.intensities[static_cast<std::size_t>(shell)] * m;
            }
        }
    }
    return p;
}

nlohmann::json to_json(const SubjectParams &p) {
    return {{"max_velocity", p.max_velocity},
            {"frequency", p.frequency},
            {"noise_sigma", p.noise_sigma},
            {"exp_steps", p.exp_steps},
            {"divergence_free", p.divergence_free}};
}

SubjectParams subject_params_from_json(const nlohmann::json &j, SubjectParams base) {
    StrictObject o(j, "subject");
    o.get("max_velocity", base.max_velocity);
    o.get("frequency", base.frequency);
    o.get("noise_sigma", base.noise_sigma);
    o.get("exp_steps", base.exp_steps);
    o.get("divergence_free", base.divergence_free);
    o.finish();
    if (!(base.max_velocity >= 0.0)) throw std::invalid_argument("subject.max_velocity must be >= 0");
    if (!(base.frequency > 0.0)) throw std::invalid_argument("subject.frequency must be > 0");
    if (!(base.noise_sigma >= 0.0)) throw std::invalid_argument("subject.noise_sigma must be >= 0");
    if (base.exp_steps < 1 || base.exp_steps > 20) throw std::invalid_argument("subject.exp_steps must be in [1, 20]");
    return base;
}

namespace {

VectorField curl(const VectorField &a) {
    const auto &g = a.geometry();
    VectorField out(g, a.kind());
    auto diff = [&](int x, int y, int z, int axis) {
        int lo[3] = {x, y, z}, hi[3] = {x, y, z};
        lo[axis] = std::max(0, lo[axis] - 1);
        hi[axis] = std::min(g.dims[axis] - 1, hi[axis] + 1);
        const Vec3 d = a(hi[0], hi[1], hi[2]) - a(lo[0], lo[1], lo[2]);
        return d * (1.0 / (hi[axis] - lo[axis]));
    };
#pragma omp parallel for schedule(static)
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x) {
                const Vec3 dx = diff(x, y, z, 0), dy = diff(x, y, z, 1), dz = diff(x, y, z, 2);
                out(x, y, z) = Vec3(dy.z - dz.y, dz.x - dx.z, dx.y - dy.x);
            }
    return out;
}

} // namespace

Subject make_subject(const Phantom &atlas, std::uint64_t seed, const SubjectParams &params) {
    if (!(params.max_velocity >= 0.0)) throw std::invalid_argument("make_subject: max_velocity must be >= 0");
    if (!(params.noise_sigma >= 0.0)) throw std::invalid_argument("make_subject: noise_sigma must be >= 0");
    const auto &g = atlas.image.geometry();
    Subject s;
    if (params.divergence_free) {
        s.velocity = curl(perlin_vector_field(g, FieldKind::velocity, params.frequency, 1.0, hash_key(seed, kSubjectStream, 0)));
        const double m = max_norm(s.velocity);
        s.velocity = scaled(s.velocity, m > 0.0 ? params.max_velocity / m : 0.0);
    } else {
        s.velocity = perlin_vector_field(g, FieldKind::velocity, params.frequency, params.max_velocity, hash_key(seed, kSubjectStream, 0));
    }
    s.displacement = exp_velocity(s.velocity, params.exp_steps);
    ScalarVolume img = warp(atlas.image, s.displacement);
    s.labels = warp(atlas.labels, s.displacement);
    // Noise only inside the warped brain. The background keeps the
    // interpolated intensities so the image stays an exact warp of the atlas.
    for (std::size_t i = 0; i < img.size(); ++i)
        if (s.labels[i] != 0) img[i] = std::max(img[i] + params.noise_sigma * standard_normal(seed, kNoiseStream, i), 1e-3);
    s.image = std::move(img);
    return s;
}

void SynthParams::validate() const {
    if (!is_finite(p_lesion)) throw std::invalid_argument("SynthParams: p_lesion must be finite");
    if (!(core_radius >= 1.0)) throw std::invalid_argument("SynthParams: core_radius must be >= 1");
    if (!(s_final > core_radius)) throw std::invalid_argument("SynthParams: s_final must exceed core_radius");
    if (!(severity >= 0.0) || !std::isfinite(severity)) throw std::invalid_argument("SynthParams: severity must be >= 0");
    if (!(contrast >= 0.0) || !std::isfinite(contrast)) throw std::invalid_argument("SynthParams: contrast must be >= 0");
    if (!(shape_amplitude >= 0.0 && shape_amplitude < 1.0)) throw std::invalid_argument("SynthParams: shape_amplitude must be in [0, 1)");
    if (!(shape_frequency > 0.0)) throw std::invalid_argument("SynthParams: shape_frequency must be > 0");
    if (ring_width < 1) throw std::invalid_argument("SynthParams: ring_width must be >= 1");
    if (!(blend_sigma >= 0.0)) throw std::invalid_argument("SynthParams: blend_sigma must be >= 0");
    if (!(window > 0.0)) throw std::invalid_argument("SynthParams: window must be > 0");
    if (margin < 0) throw std::invalid_argument("SynthParams: margin must be >= 0");
    reg.validate();
}

nlohmann::json to_json(const SynthParams &p) {
    return {{"p_lesion", vec3_json(p.p_lesion)},
            {"core_radius", p.core_radius},
            {"s_final", p.s_final},
            {"severity", p.severity},
            {"contrast", p.contrast},
            {"seed", p.seed},
            {"shape_amplitude", p.shape_amplitude},
            {"shape_frequency", p.shape_frequency},
            {"ring_width", p.ring_width},
            {"blend_sigma", p.blend_sigma},
            {"window", p.window},
            {"margin", p.margin},
            {"registration", to_json(p.reg)}};
}

SynthParams synth_params_from_json(const nlohmann::json &j, SynthParams base) {
    StrictObject o(j, "synthesis");
    if (const auto *p = o.sub("p_lesion")) base.p_lesion = vec3_from_json(*p, "synthesis.p_lesion");
    o.get("core_radius", base.core_radius);
    o.get("s_final", base.s_final);
    o.get("severity", base.severity);
    o.get("contrast", base.contrast);
    o.get("seed", base.seed);
    o.get("shape_amplitude", base.shape_amplitude);
    o.get("shape_frequency", base.shape_frequency);
    o.get("ring_width", base.ring_width);
    o.get("blend_sigma", base.blend_sigma);
    o.get("window", base.window);
    o.get("margin", base.margin);
    if (const auto *r = o.sub("registration")) base.reg = reg_params_from_json(*r, base.reg);
    o.finish();
    base.validate();
    return base;
}

ScalarVolume falloff_window(const Mask &final_mask, double width) {
    if (!(width > 0.0)) throw std::invalid_argument("falloff_window: width must be > 0");
    const ScalarVolume sd = signed_distance(final_mask);
    ScalarVolume w(final_mask.geometry());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double s = sd[i];
        w[i] = s <= 0.0 ? 1.0 : (s >= width ? 0.0 : 0.5 * (1.0 + std::cos(std::numbers::pi * s / width)));
    }
    return w;
}

std::pair<Mask, Mask> lesion_masks(const GridGeometry &g, const SynthParams &params) {
    params.validate();
    const auto core_mesh = make_blob_mesh(params.p_lesion, params.core_radius, params.shape_amplitude, params.shape_frequency,
                                          hash_key(params.seed, kShapeStream, 1));
    const auto final_mesh = make_blob_mesh(params.p_lesion, params.s_final, params.shape_amplitude, params.shape_frequency,
                                           hash_key(params.seed, kFinalBlobStream, 1));
    const Mask core = voxelize_blob(core_mesh, g);
    // The grown lesion always covers its core.
    const Mask fin = mask_or(voxelize_blob(final_mesh, g), core);
    return {core, fin};
}

namespace {

ScalarVolume make_core_image(const ScalarVolume &healthy, const Mask &core, const SynthParams &params) {
    const Mask ring = mask_and(dilate(core, params.ring_width), mask_not(core));
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < ring.size(); ++i)
        if (ring[i]) {
            sum += healthy[i];
            ++n;
        }
    if (n == 0) throw std::runtime_error("synthesize_lesion: empty ring around the core");
    const double value = params.contrast * sum / static_cast<double>(n);
    const ScalarVolume blend = gaussian_smooth(to_scalar(core), params.blend_sigma);
    ScalarVolume out(healthy.geometry());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = blend[i] == 0.0 ? healthy[i] : healthy[i] * (1.0 - blend[i]) + value * blend[i];
    return out;
}

void check_placement(const ScalarVolume &healthy, const SynthParams &params, const Mask *placement, const Mask &fin) {
    const auto &g = healthy.geometry();
    const Vec3 p = params.p_lesion;
    const int px = static_cast<int>(std::lround(p.x)), py = static_cast<int>(std::lround(p.y)), pz = static_cast<int>(std::lround(p.z));
    if (!g.contains(px, py, pz)) throw std::invalid_argument("synthesize_lesion: p_lesion outside the grid");
    if (placement) {
        require_same_geometry(g, placement->geometry(), "synthesize_lesion");
        if (!(*placement)(px, py, pz)) throw std::invalid_argument("synthesize_lesion: p_lesion outside the placement region");
    }
    const Mask brain = threshold_mask(healthy, 0.0);
    const ScalarVolume to_outside = distance_transform(mask_not(brain));
    for (std::size_t i = 0; i < fin.size(); ++i)
        if (fin[i] && !(to_outside[i] > params.margin))
            throw PlacementError("synthesize_lesion: blob placement infeasible (final lesion too close to the brain boundary)");
}

} // namespace

SynthCase synthesize_lesion_with_velocity(const ScalarVolume &healthy, const SynthParams &params, const Mask &core_mask,
                                          const Mask &final_mask, const VectorField &v_raw) {
    params.validate();
    require_same_geometry(healthy.geometry(), core_mask.geometry(), "synthesize_lesion");
    require_same_geometry(healthy.geometry(), final_mask.geometry(), "synthesize_lesion");
    require_same_geometry(healthy.geometry(), v_raw.geometry(), "synthesize_lesion");
    SynthCase c;
    c.params = params;
    c.healthy = healthy;
    c.core_mask = core_mask;
    c.final_mask = final_mask;
    c.core_image = make_core_image(healthy, core_mask, params);
    const ScalarVolume w = falloff_window(final_mask, params.window);
    c.gt_velocity = VectorField(healthy.geometry(), FieldKind::velocity);
    if (params.severity > 0.0)
        for (std::size_t i = 0; i < w.size(); ++i) c.gt_velocity[i] = v_raw[i] * (params.severity * w[i]);
    c.gt_displacement = exp_velocity(c.gt_velocity, params.reg.exp_steps);
    const VectorField growth = invert(c.gt_velocity, params.reg.exp_steps);
    c.lesioned = warp(c.core_image, growth);
    c.expansion_dice = dice(warp(core_mask, growth), final_mask);
    return c;
}

SynthCase synthesize_lesion(const ScalarVolume &healthy, const SynthParams &params, const Mask *placement) {
    params.validate();
    if (!all_finite(healthy)) throw std::invalid_argument("synthesize_lesion: non-finite input");
    const auto [core, fin] = lesion_masks(healthy.geometry(), params);
    check_placement(healthy, params, placement, fin);
    if (params.severity == 0.0) return synthesize_lesion_with_velocity(healthy, params, core, fin, VectorField(healthy.geometry(), FieldKind::velocity));
    const RegResult r = register_masks(core, fin, params.reg);
    SynthCase c = synthesize_lesion_with_velocity(healthy, params, core, fin, r.velocity);
    c.registration_dice = r.mask_dice;
    return c;
}

double mean_abs_divergence(const VectorField &v, const Mask &region) {
    require_same_geometry(v.geometry(), region.geometry(), "mean_abs_divergence");
    const ScalarVolume div = divergence(v);
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < div.size(); ++i)
        if (region[i]) {
            s += std::abs(div[i]);
            ++n;
        }
    if (n == 0) throw std::invalid_argument("mean_abs_divergence: empty region");
    return s / static_cast<double>(n);
}

NormativeJacobianPool::NormativeJacobianPool(std::vector<float> samples, nlohmann::json provenance)
    : samples_(std::move(samples)), provenance_(std::move(provenance)) {
    if (samples_.empty()) throw std::invalid_argument("NormativeJacobianPool: no samples");
    for (float s : samples_)
        if (!std::isfinite(s)) throw std::invalid_argument("NormativeJacobianPool: non-finite sample");
    std::sort(samples_.begin(), samples_.end());
    for (int p = 1; p <= 99; ++p) table_[static_cast<std::size_t>(p - 1)] = percentile(p);
}

double NormativeJacobianPool::percentile(double p) const {
    if (samples_.empty()) throw std::logic_error("NormativeJacobianPool: empty pool");
    if (!(p >= 0.0 && p <= 100.0)) throw std::invalid_argument("percentile: p must be in [0, 100]");
    const double pos = p / 100.0 * static_cast<double>(samples_.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, samples_.size() - 1);
    const double f = pos - static_cast<double>(lo);
    return static_cast<double>(samples_[lo]) * (1.0 - f) + static_cast<double>(samples_[hi]) * f;
}

void NormativeJacobianPool::save(const std::filesystem::path &dir) const {
    static_assert(std::endian::native == std::endian::little, "pool files are little endian");
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(dir / "pool.bin", std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write " + (dir / "pool.bin").string());
        os.write(reinterpret_cast<const char *>(samples_.data()), static_cast<std::streamsize>(samples_.size() * sizeof(float)));
        if (!os) throw std::runtime_error("write failed: " + (dir / "pool.bin").string());
    }
    nlohmann::json j;
    j["count"] = samples_.size();
    j["percentiles"] = table_;
    j["provenance"] = provenance_;
    std::ofstream os(dir / "pool.json", std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + (dir / "pool.json").string());
    os << j.dump(2) << "\n";
}

NormativeJacobianPool NormativeJacobianPool::load(const std::filesystem::path &dir) {
    std::ifstream js(dir / "pool.json");
    if (!js) throw std::runtime_error("cannot read " + (dir / "pool.json").string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(js);
    } catch (const nlohmann::json::exception &e) {
        throw std::runtime_error("pool.json: " + std::string(e.what()));
    }
    const auto count = j.at("count").get<std::size_t>();
    std::ifstream bs(dir / "pool.bin", std::ios::binary);
    if (!bs) throw std::runtime_error("cannot read " + (dir / "pool.bin").string());
    std::vector<float> samples(count);
    bs.read(reinterpret_cast<char *>(samples.data()), static_cast<std::streamsize>(count * sizeof(float)));
    if (bs.gcount() != static_cast<std::streamsize>(count * sizeof(float))) throw std::runtime_error("pool.bin: truncated");
    if (bs.peek() != std::char_traits<char>::eof()) throw std::runtime_error("pool.bin: trailing bytes");
    return NormativeJacobianPool(std::move(samples), j.value("provenance", nlohmann::json::object()));
}

const char *to_string(PoolRegion r) { return r == PoolRegion::brain ? "brain" : "grid_interior"; }

PoolRegion pool_region_from_string(const std::string &s) {
    if (s == "brain") return PoolRegion::brain;
    if (s == "grid_interior") return PoolRegion::grid_interior;
    throw std::invalid_argument("unknown pool region: " + s);
}

std::vector<float> interior_jacobians(const VectorField &d, const Mask *within) {
    const auto &g = d.geometry();
    if (within) require_same_geometry(g, within->geometry(), "interior_jacobians");
    const auto jac = jacobian_determinant(d);
    std::vector<float> out;
    out.reserve(static_cast<std::size_t>(g.dims[0] - 2) * (g.dims[1] - 2) * (g.dims[2] - 2));
    for (int z = 1; z < g.dims[2] - 1; ++z)
        for (int y = 1; y < g.dims[1] - 1; ++y)
            for (int x = 1; x < g.dims[0] - 1; ++x)
                if (!within || (*within)(x, y, z)) out.push_back(static_cast<float>(jac(x, y, z)));
    return out;
}

NormativeJacobianPool build_normative_pool(const ScalarVolume &atlas, const std::vector<ScalarVolume> &subjects, const RegParams &reg,
                                           const nlohmann::json &provenance, PoolRegion region) {
    if (subjects.size() < 5) throw std::invalid_argument("build_normative_pool: need at least 5 subjects");
    std::vector<float> all;
    for (const auto &s : subjects) {
        require_same_geometry(atlas.geometry(), s.geometry(), "build_normative_pool");
        const RegResult r = register_images(atlas, s, reg);
        const Mask brain = threshold_mask(s, 0.0);
        const auto j = interior_jacobians(r.displacement, region == PoolRegion::brain ? &brain : nullptr);
        all.insert(all.end(), j.begin(), j.end());
    }
    nlohmann::json prov = provenance;
    prov["subjects"] = subjects.size();
    prov["registration"] = to_json(reg);
    prov["region"] = to_string(region);
    return NormativeJacobianPool(std::move(all), prov);
}

} // namespace lesionrev
