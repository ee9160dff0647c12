#include "lesionrev/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "lesionrev/morphology.hpp"
#include "lesionrev/parallel.hpp"

namespace lesionrev {

namespace {

template <class A, class B>
double dice_impl(std::size_t n, A in_a, B in_b) {
    std::size_t na = 0, nb = 0, both = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool a = in_a(i), b = in_b(i);
        na += a;
        nb += b;
        both += a && b;
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

} // namespace

double dice(const Mask &a, const Mask &b) {
    require_same_geometry(a.geometry(), b.geometry(), "dice");
    return dice_impl(a.size(), [&](std::size_t i) { return a[i] != 0; }, [&](std::size_t i) { return b[i] != 0; });
}

double dice(const LabelVolume &a, const LabelVolume &b, std::int32_t label) {
    require_same_geometry(a.geometry(), b.geometry(), "dice");
    return dice_impl(a.size(), [&](std::size_t i) { return a[i] == label; }, [&](std::size_t i) { return b[i] == label; });
}

double dice_in_region(const LabelVolume &a, const LabelVolume &b, std::int32_t label, const Mask &region) {
    require_same_geometry(a.geometry(), b.geometry(), "dice");
    require_same_geometry(a.geometry(), region.geometry(), "dice");
    return dice_impl(a.size(), [&](std::size_t i) { return region[i] && a[i] == label; },
                     [&](std::size_t i) { return region[i] && b[i] == label; });
}

namespace {

Mask perilesional_region(const Mask &lesion_mask, double dist) {
    if (!(dist > 0.0)) throw std::invalid_argument("dice_perilesional: dist must be > 0");
    if (count_nonzero(lesion_mask) == 0) throw std::invalid_argument("dice_perilesional: lesion mask is empty");
    return within_distance(lesion_mask, dist);
}

} // namespace

double dice_perilesional(const Mask &a, const Mask &b, const Mask &lesion_mask, double dist) {
    require_same_geometry(a.geometry(), b.geometry(), "dice_perilesional");
    require_same_geometry(a.geometry(), lesion_mask.geometry(), "dice_perilesional");
    const Mask region = perilesional_region(lesion_mask, dist);
    return dice_impl(a.size(), [&](std::size_t i) { return region[i] && a[i]; }, [&](std::size_t i) { return region[i] && b[i]; });
}

double dice_perilesional(const LabelVolume &a, const LabelVolume &b, std::int32_t label, const Mask &lesion_mask, double dist) {
    require_same_geometry(a.geometry(), lesion_mask.geometry(), "dice_perilesional");
    return dice_in_region(a, b, label, perilesional_region(lesion_mask, dist));
}

double mean_dice(const LabelVolume &a, const LabelVolume &b, const std::vector<std::int32_t> &labels, const std::optional<Mask> &region) {
    if (labels.empty()) throw std::invalid_argument("mean_dice: no labels");
    double s = 0.0;
    for (auto l : labels) s += region ? dice_in_region(a, b, l, *region) : dice(a, b, l);
    return s / static_cast<double>(labels.size());
}

std::vector<std::int32_t> label_set(const LabelVolume &v) {
    std::set<std::int32_t> s;
    for (auto l : v.data())
        if (l != 0) s.insert(l);
    return {s.begin(), s.end()};
}

double nmse(const ScalarVolume &x, const ScalarVolume &ref) {
    require_same_geometry(x.geometry(), ref.geometry(), "nmse");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - ref[i];
        num += d * d;
        den += ref[i] * ref[i];
    }
    if (den == 0.0) throw std::invalid_argument("nmse: reference is all zero");
    return num / den;
}

namespace {

// Box sums over every fully-inside w^3 window; output dims n - w + 1.
std::vector<double> valid_box_sums(const std::vector<double> &in, const std::array<int, 3> &dims, int w) {
    const int nx = dims[0], ny = dims[1], nz = dims[2];
    const int ox = nx - w + 1, oy = ny - w + 1, oz = nz - w + 1;
    // along x
    std::vector<double> a(static_cast<std::size_t>(ox) * ny * nz);
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < ox; ++x) {
                double s = 0.0;
                for (int k = 0; k < w; ++k) s += in[static_cast<std::size_t>(x + k) + static_cast<std::size_t>(nx) * (y + static_cast<std::size_t>(ny) * z)];
                a[static_cast<std::size_t>(x) + static_cast<std::size_t>(ox) * (y + static_cast<std::size_t>(ny) * z)] = s;
            }
    std::vector<double> b(static_cast<std::size_t>(ox) * oy * nz);
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < oy; ++y)
            for (int x = 0; x < ox; ++x) {
                double s = 0.0;
                for (int k = 0; k < w; ++k) s += a[static_cast<std::size_t>(x) + static_cast<std::size_t>(ox) * (y + k + static_cast<std::size_t>(ny) * z)];
                b[static_cast<std::size_t>(x) + static_cast<std::size_t>(ox) * (y + static_cast<std::size_t>(oy) * z)] = s;
            }
    std::vector<double> c(static_cast<std::size_t>(ox) * oy * oz);
    for (int z = 0; z < oz; ++z)
        for (int y = 0; y < oy; ++y)
            for (int x = 0; x < ox; ++x) {
                double s = 0.0;
                for (int k = 0; k < w; ++k) s += b[static_cast<std::size_t>(x) + static_cast<std::size_t>(ox) * (y + static_cast<std::size_t>(oy) * (z + k))];
                c[static_cast<std::size_t>(x) + static_cast<std::size_t>(ox) * (y + static_cast<std::size_t>(oy) * z)] = s;
            }
    return c;
}

} // namespace

double ssim3d(const ScalarVolume &x, const ScalarVolume &ref, const SsimParams &p) {
    require_same_geometry(x.geometry(), ref.geometry(), "ssim3d");
    if (p.window < 3 || p.window % 2 == 0) throw std::invalid_argument("ssim3d: window must be odd and >= 3");
    if (!(p.data_range > 0.0)) throw std::invalid_argument("ssim3d: data_range must be > 0");
    if (p.window > x.geometry().min_dim()) throw std::invalid_argument("ssim3d: window larger than a grid dimension");
    const auto &dims = x.dims();
    const std::size_t n = x.size();
    std::vector<double> vx(n), vy(n), vxx(n), vyy(n), vxy(n);
    for (std::size_t i = 0; i < n; ++i) {
        vx[i] = x[i];
        vy[i] = ref[i];
        vxx[i] = x[i] * x[i];
        vyy[i] = ref[i] * ref[i];
        vxy[i] = x[i] * ref[i];
    }
    const auto sx = valid_box_sums(vx, dims, p.window), sy = valid_box_sums(vy, dims, p.window);
    const auto sxx = valid_box_sums(vxx, dims, p.window), syy = valid_box_sums(vyy, dims, p.window);
    const auto sxy = valid_box_sums(vxy, dims, p.window);
    const double count = static_cast<double>(p.window) * p.window * p.window;
    const double c1 = (p.k1 * p.data_range) * (p.k1 * p.data_range);
    const double c2 = (p.k2 * p.data_range) * (p.k2 * p.data_range);
    double total = 0.0;
    for (std::size_t i = 0; i < sx.size(); ++i) {
        const double mx = sx[i] / count, my = sy[i] / count;
        const double varx = sxx[i] / count - mx * mx;
        const double vary = syy[i] / count - my * my;
        const double cov = sxy[i] / count - mx * my;
        const double num = (2.0 * (mx * my) + c1) * (2.0 * cov + c2);
        const double den = (mx * mx + my * my + c1) * (varx + vary + c2);
        total += num / den;
    }
    return total / static_cast<double>(sx.size());
}

double field_nmse(const VectorField &f, const VectorField &ref) {
    require_same_geometry(f.geometry(), ref.geometry(), "field_nmse");
    if (f.kind() != ref.kind()) throw std::invalid_argument("field_nmse: field kinds differ");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Vec3 d = f[i] - ref[i];
        num += dot(d, d);
        den += dot(ref[i], ref[i]);
    }
    if (den == 0.0) throw std::invalid_argument("field_nmse: reference field is zero");
    return num / den;
}

const std::vector<std::string> &metric_registry() {
    static const std::vector<std::string> names{
        "segmentation_dice", "false_positive_fraction", "core_dice", "core_volume_ratio",
        "nmse_lesioned",     "nmse_estimate",           "ssim_lesioned", "ssim_estimate",
        "dice_baseline",     "dice_proposed",           "field_nmse_baseline", "field_nmse_proposed",
        "runtime_seconds"};
    return names;
}

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

namespace {

void validate_rows(const std::vector<ReportRow> &rows) {
    const auto &reg = metric_registry();
    for (const auto &r : rows) {
        if (!std::isfinite(r.value)) throw std::invalid_argument("report: non-finite value for " + r.metric);
        if (std::find(reg.begin(), reg.end(), r.metric) == reg.end()) throw std::invalid_argument("report: unknown metric " + r.metric);
        for (const auto &s : {r.case_id, r.scope})
            if (s.find_first_of(",\n\"") != std::string::npos) throw std::invalid_argument("report: field contains a separator");
    }
}

} // namespace

std::string report_csv(const std::vector<ReportRow> &rows) {
    validate_rows(rows);
    std::ostringstream os;
    os << "case,metric,scope,value\n";
    for (const auto &r : rows) os << r.case_id << ',' << r.metric << ',' << r.scope << ',' << format_double(r.value) << '\n';
    return os.str();
}

nlohmann::json report_json(const EvalReport &report) {
    validate_rows(report.rows);
    nlohmann::json j;
    j["tool_version"] = report.tool_version;
    j["seed"] = report.seed;
    j["config"] = report.config;
    auto &rows = j["rows"] = nlohmann::json::array();
    for (const auto &r : report.rows) rows.push_back({{"case", r.case_id}, {"metric", r.metric}, {"scope", r.scope}, {"value", r.value}});
    return j;
}

EvalReport report_from_json(const nlohmann::json &j) {
    EvalReport r;
    r.tool_version = j.at("tool_version").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config = j.at("config");
    for (const auto &row : j.at("rows")) {
        r.rows.push_back({row.at("case").get<std::string>(), row.at("metric").get<std::string>(), row.at("scope").get<std::string>(),
                          row.at("value").get<double>()});
    }
    return r;
}

void emit_report(const EvalReport &report, const std::filesystem::path &path, ReportFormat format) {
    const std::string text = format == ReportFormat::csv ? report_csv(report.rows) : report_json(report).dump(2) + "\n";
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("emit_report: cannot write " + path.string());
    os << text;
    if (!os) throw std::runtime_error("emit_report: write failed for " + path.string());
}

} // namespace lesionrev
