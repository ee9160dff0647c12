#include "doctest.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "lesionrev/metrics.hpp"
#include "lesionrev/morphology.hpp"
#include "test_util.hpp"

using namespace lesionrev;

namespace {

Mask box(const GridGeometry &g, std::array<int, 3> lo, std::array<int, 3> hi) {
    Mask m(g);
    for (int z = lo[2]; z < hi[2]; ++z)
        for (int y = lo[1]; y < hi[1]; ++y)
            for (int x = lo[0]; x < hi[0]; ++x) m(x, y, z) = 1;
    return m;
}

// Straightforward per-window SSIM, one window at a time.
double ssim_direct(const ScalarVolume &a, const ScalarVolume &b, int w, double k1, double k2, double range) {
    const auto &d = a.dims();
    const double c1 = (k1 * range) * (k1 * range), c2 = (k2 * range) * (k2 * range);
    double total = 0.0;
    long count = 0;
    for (int z = 0; z + w <= d[2]; ++z)
        for (int y = 0; y + w <= d[1]; ++y)
            for (int x = 0; x + w <= d[0]; ++x) {
                const double n = double(w) * w * w;
                double ma = 0, mb = 0;
                for (int k = 0; k < w; ++k)
                    for (int j = 0; j < w; ++j)
                        for (int i = 0; i < w; ++i) {
                            ma += a(x + i, y + j, z + k);
                            mb += b(x + i, y + j, z + k);
                        }
                ma /= n;
                mb /= n;
                double va = 0, vb = 0, cab = 0;
                for (int k = 0; k < w; ++k)
                    for (int j = 0; j < w; ++j)
                        for (int i = 0; i < w; ++i) {
                            const double da = a(x + i, y + j, z + k) - ma, db = b(x + i, y + j, z + k) - mb;
                            va += da * da;
                            vb += db * db;
                            cab += da * db;
                        }
                va /= n;
                vb /= n;
                cab /= n;
                total += (2 * ma * mb + c1) * (2 * cab + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                ++count;
            }
    return total / count;
}

} // namespace

TEST_CASE("dice basics") {
    const auto g = make_geometry({8, 8, 8});
    const Mask a = box(g, {2, 2, 2}, {4, 4, 4});
    const Mask b = box(g, {3, 2, 2}, {5, 4, 4});
    CHECK(dice(a, a) == 1.0);
    CHECK(dice(a, b) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(dice(a, box(g, {5, 5, 5}, {7, 7, 7})) == 0.0);
    CHECK(dice(Mask(g), Mask(g)) == 1.0);
    CHECK(dice(a, b) == dice(b, a));
    CHECK_THROWS_AS(dice(a, Mask(make_geometry({8, 8, 7}))), std::invalid_argument);

    LabelVolume la(g), lb(g);
    for (std::size_t i = 0; i < la.size(); ++i) {
        la[i] = a[i] ? 3 : 1;
        lb[i] = b[i] ? 3 : 1;
    }
    CHECK(dice(la, lb, 3) == doctest::Approx(0.5));
    CHECK(label_set(la) == std::vector<std::int32_t>{1, 3});
    CHECK(mean_dice(la, la, {1, 3}) == 1.0);
}

TEST_CASE("dice property: symmetric and bounded on random masks") {
    const auto g = make_geometry({10, 9, 8});
    for (std::uint64_t s = 0; s < 20; ++s) {
        Mask a(g), b(g);
        CounterRng rng(s, 5);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = rng.uniform() < 0.3;
            b[i] = rng.uniform() < 0.4;
        }
        const double d = dice(a, b);
        CHECK(d >= 0.0);
        CHECK(d <= 1.0);
        CHECK(d == dice(b, a));
        CHECK(dice(a, a) == 1.0);
    }
}

TEST_CASE("perilesional dice") {
    const auto g = make_geometry({9, 9, 9});
    Mask lesion(g);
    lesion(4, 4, 4) = 1;
    const Mask region = within_distance(lesion, 1.0);
    CHECK(count_nonzero(region) == 7);
    CHECK(region(3, 4, 4) == 1);
    CHECK(region(4, 4, 5) == 1);
    CHECK(region(3, 3, 4) == 0);

    const Mask a = box(g, {2, 2, 2}, {5, 5, 5});
    const Mask b = box(g, {3, 2, 2}, {7, 6, 5});
    const double diameter = std::sqrt(3.0) * 9;
    CHECK(dice_perilesional(a, b, lesion, diameter) == doctest::Approx(dice(a, b)).epsilon(1e-15));

    // Identical inside the region, different far away.
    Mask c = a, d = a;
    c(0, 0, 0) = 1;
    d(8, 8, 8) = 1;
    CHECK(dice_perilesional(c, d, lesion, 2.0) == 1.0);
    CHECK(dice(c, d) < 1.0);

    CHECK_THROWS_AS(dice_perilesional(a, b, Mask(g)), std::invalid_argument);
    CHECK_THROWS_AS(dice_perilesional(a, b, lesion, 0.0), std::invalid_argument);

    LabelVolume la(g, 1), lb(g, 1);
    lb(0, 0, 0) = 2;
    CHECK(dice_perilesional(la, lb, 1, lesion, 3.0) == 1.0);
}

TEST_CASE("nmse") {
    const auto g = make_geometry({6, 5, 4});
    const auto ref = testutil::random_volume(g, 3);
    ScalarVolume scaled(g), zero(g);
    for (std::size_t i = 0; i < ref.size(); ++i) scaled[i] = 1.1 * ref[i];
    CHECK(nmse(ref, ref) == 0.0);
    CHECK(nmse(scaled, ref) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(nmse(zero, ref) == 1.0);
    CHECK_THROWS_AS(nmse(ref, zero), std::invalid_argument);
    CHECK(nmse(testutil::random_volume(g, 4), ref) > 0.0);
}

TEST_CASE("ssim3d") {
    const auto g = make_geometry({16, 16, 16});
    const auto a = testutil::random_volume(g, 11);
    auto b = testutil::random_volume(g, 12);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = 0.6 * a[i] + 0.4 * b[i];
    CHECK(ssim3d(a, a) == 1.0);
    CHECK(ssim3d(b, b) == 1.0);
    CHECK(ssim3d(ScalarVolume(g, 0.3), ScalarVolume(g, 0.3)) == 1.0);
    CHECK(ssim3d(a, b) == ssim3d(b, a));
    CHECK(std::abs(ssim3d(a, b) - ssim_direct(a, b, 7, 0.01, 0.03, 1.0)) <= 1e-9);
    SsimParams p{5, 0.02, 0.05, 2.0};
    CHECK(std::abs(ssim3d(a, b, p) - ssim_direct(a, b, 5, 0.02, 0.05, 2.0)) <= 1e-9);
    CHECK_THROWS_AS(ssim3d(a, b, SsimParams{4}), std::invalid_argument);
    CHECK_THROWS_AS(ssim3d(a, b, SsimParams{17}), std::invalid_argument);
    CHECK_THROWS_AS(ssim3d(a, b, SsimParams{7, 0.01, 0.03, 0.0}), std::invalid_argument);
}

TEST_CASE("field_nmse") {
    const auto g = make_geometry({5, 5, 5});
    VectorField ref(g, FieldKind::displacement);
    CounterRng rng(1, 2);
    for (auto &v : ref.data()) v = {rng.normal(), rng.normal(), rng.normal()};
    CHECK(field_nmse(ref, ref) == 0.0);
    CHECK(field_nmse(VectorField(g, FieldKind::displacement), ref) == 1.0);
    CHECK(field_nmse(scaled(ref, 1.1), ref) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK_THROWS_AS(field_nmse(ref, VectorField(g, FieldKind::displacement)), std::invalid_argument);
    CHECK_THROWS_AS(field_nmse(with_kind(ref, FieldKind::velocity), ref), std::invalid_argument);
}

TEST_CASE("report emission") {
    testutil::TempDir dir;
    EvalReport empty;
    emit_report(empty, dir.path / "empty.csv", ReportFormat::csv);
    std::ifstream is(dir.path / "empty.csv");
    std::stringstream ss;
    ss << is.rdbuf();
    CHECK(ss.str() == "case,metric,scope,value\n");

    EvalReport r;
    r.tool_version = "0.1.0";
    r.seed = 7;
    r.config = {{"cases", 2}};
    r.rows = {{"case_000", "dice_proposed", "whole", 0.8125}, {"case_000", "dice_proposed", "roi:3", 0.1},
              {"case_001", "nmse_estimate", "whole", 1.0 / 3.0}};
    // Golden bytes.
    CHECK(report_csv(r.rows) ==
          "case,metric,scope,value\n"
          "case_000,dice_proposed,whole,0.8125\n"
          "case_000,dice_proposed,roi:3,0.1\n"
          "case_001,nmse_estimate,whole,0.3333333333333333\n");
    const auto back = report_from_json(nlohmann::json::parse(report_json(r).dump()));
    CHECK(back.rows.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.rows[i].case_id == r.rows[i].case_id);
        CHECK(back.rows[i].metric == r.rows[i].metric);
        CHECK(back.rows[i].scope == r.rows[i].scope);
        CHECK(back.rows[i].value == r.rows[i].value);
    }
    CHECK(back.config == r.config);
    CHECK(back.seed == 7);

    emit_report(r, dir.path / "a.json", ReportFormat::json);
    emit_report(r, dir.path / "b.json", ReportFormat::json);
    auto slurp = [](const std::filesystem::path &p) {
        std::ifstream f(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(f), {});
    };
    CHECK(slurp(dir.path / "a.json") == slurp(dir.path / "b.json"));

    EvalReport bad = r;
    bad.rows.push_back({"c", "not_a_metric", "whole", 1.0});
    CHECK_THROWS_AS(report_csv(bad.rows), std::invalid_argument);
    bad.rows.back() = {"c", "nmse_estimate", "whole", NAN};
    CHECK_THROWS_AS(emit_report(bad, dir.path / "x.csv", ReportFormat::csv), std::invalid_argument);
    CHECK_THROWS_AS(emit_report(r, dir.path / "missing" / "x.csv", ReportFormat::csv), std::runtime_error);
}

TEST_CASE("morphology") {
    const auto g = make_geometry({11, 11, 11});
    Mask dot(g);
    dot(5, 5, 5) = 1;
    CHECK(count_nonzero(dilate(dot, 1.0)) == 7);
    CHECK(count_nonzero(dilate(dot, std::sqrt(2.0))) == 19);
    CHECK(erode(dilate(dot, 1.0), 1.0) == dot);
    const Mask cube = box(g, {2, 2, 2}, {9, 9, 9});
    CHECK(count_nonzero(erode(cube, 1.0)) == 125);
    CHECK(opening(dot, 1.0) == Mask(g));

    // A one-voxel gap is bridged by closing.
    Mask split = cube;
    for (int y = 2; y < 9; ++y)
        for (int z = 2; z < 9; ++z) split(5, y, z) = 0;
    CHECK(connected_components(split).sizes.size() == 3);
    const Mask closed = closing(split, 1.0);
    CHECK(closed(5, 5, 5) == 1);

    // Erosion treats voxels beyond the faces as foreground.
    CHECK(erode(Mask(g, 1), 2.0) == Mask(g, 1));

    Mask two = dot;
    two(0, 0, 0) = 1;
    two(1, 0, 0) = 1;
    const auto comps = connected_components(two);
    REQUIRE(comps.sizes.size() == 3);
    CHECK(comps.sizes[1] == 2);
    CHECK(comps.sizes[2] == 1);
    CHECK(comps.labels(0, 0, 0) == comps.labels(1, 0, 0));
    const Mask kept = remove_small_components(two, 2);
    CHECK(count_nonzero(kept) == 2);
    CHECK(kept(5, 5, 5) == 0);

    CHECK(mask_and(cube, dot) == dot);
    CHECK(mask_or(cube, dot) == cube);
    CHECK(count_nonzero(mask_not(cube)) == 11 * 11 * 11 - 343);
}
