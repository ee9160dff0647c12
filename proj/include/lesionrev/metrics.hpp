#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lesionrev/field.hpp"

namespace lesionrev {

// 2|A n B| / (|A| + |B|); 1 when both are empty.
double dice(const Mask &a, const Mask &b);
double dice(const LabelVolume &a, const LabelVolume &b, std::int32_t label);

// Dice restricted to voxels within `dist` (Euclidean) of lesion_mask.
double dice_perilesional(const Mask &a, const Mask &b, const Mask &lesion_mask, double dist = 10.0);
double dice_perilesional(const LabelVolume &a, const LabelVolume &b, std::int32_t label, const Mask &lesion_mask, double dist = 10.0);

// Restricted Dice with an explicit region.
double dice_in_region(const LabelVolume &a, const LabelVolume &b, std::int32_t label, const Mask &region);

// Mean of per-label Dice over `labels`, optionally restricted to a region.
double mean_dice(const LabelVolume &a, const LabelVolume &b, const std::vector<std::int32_t> &labels,
                 const std::optional<Mask> &region = std::nullopt);

// Sorted distinct nonzero labels.
std::vector<std::int32_t> label_set(const LabelVolume &v);

// ||x - ref||^2 / ||ref||^2
double nmse(const ScalarVolume &x, const ScalarVolume &ref);

struct SsimParams {
    int window = 7;
    double k1 = 0.01;
    double k2 = 0.03;
    double data_range = 1.0;
};

// Mean SSIM over all valid (fully inside) positions of a uniform cubic window.
double ssim3d(const ScalarVolume &x, const ScalarVolume &ref, const SsimParams &params = {});

// Sum over components of ||f - ref||^2 divided by ||ref||^2.
double field_nmse(const VectorField &f, const VectorField &ref);

struct ReportRow {
    std::string case_id;
    std::string metric;
    std::string scope;
    double value = 0.0;
};

// Fixed registry of metric names.
const std::vector<std::string> &metric_registry();

enum class ReportFormat { csv, json };

struct EvalReport {
    std::vector<ReportRow> rows;
    nlohmann::json config = nlohmann::json::object();
    std::string tool_version;
    std::uint64_t seed = 0;
};

// Throws std::invalid_argument on non-finite values or unknown metric names,
// std::runtime_error when the path cannot be written.
void emit_report(const EvalReport &report, const std::filesystem::path &path, ReportFormat format);
std::string report_csv(const std::vector<ReportRow> &rows);
nlohmann::json report_json(const EvalReport &report);
EvalReport report_from_json(const nlohmann::json &j);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

} // namespace lesionrev
