#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "json.hpp"
#include "lesionrev/diffusion.hpp"
#include "lesionrev/nifti.hpp"
#include "lesionrev/reversal.hpp"
#include "lesionrev/synthesis.hpp"
#include "test_util.hpp"

using namespace lesionrev;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out, err;
};

std::string slurp(const fs::path &p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Run cli(const testutil::TempDir &dir, const std::string &args) {
    const auto out = dir.path / "stdout.txt", err = dir.path / "stderr.txt";
    const std::string cmd = "cd \"" + dir.path.string() + "\" && \"" LESIONREV_CLI_PATH "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                            err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::size_t file_count(const fs::path &dir) {
    std::size_t n = 0;
    for ([[maybe_unused]] const auto &e : fs::directory_iterator(dir)) ++n;
    return n;
}

} // namespace

TEST_CASE("cli phantom writes the atlas and the resolved config") {
    testutil::TempDir dir;
    const auto r = cli(dir, "phantom --out ph --seed 4 --json");
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir.path / "ph" / "atlas.nii"));
    CHECK(fs::exists(dir.path / "ph" / "atlas_labels.nii"));
    const auto cfg = nlohmann::json::parse(slurp(dir.path / "ph" / "config.json"));
    CHECK(cfg["seed"] == 4);
    const auto summary = nlohmann::json::parse(r.out);
    CHECK(summary["command"] == "phantom");
    CHECK(summary["files"].size() == 3);
    CHECK(read_nifti_labels(dir.path / "ph" / "atlas_labels.nii") == make_phantom({}).labels);
}

TEST_CASE("cli exit codes") {
    testutil::TempDir dir;
    std::ofstream(dir.path / "typo.json") << R"({"registration": {"lamda_bend": 1.0}})";
    auto r = cli(dir, "phantom --config typo.json --out x");
    CHECK(r.code == 2);
    CHECK(r.err.find("lamda_bend") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.path / "x"));

    CHECK(cli(dir, "").code == 2);
    CHECK(cli(dir, "frobnicate").code == 2);
    CHECK(cli(dir, "register --moving a.nii").code == 2);
    CHECK(cli(dir, "phantom").code == 2);

    r = cli(dir, "register --moving missing.nii --fixed missing.nii --out y");
    CHECK(r.code == 3);
    CHECK(r.err.find("missing.nii") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.path / "y"));

    std::ofstream(dir.path / "junk.nii") << "not a nifti file";
    CHECK(cli(dir, "inpaint --image junk.nii --mask junk.nii --out z").code == 3);
    CHECK(cli(dir, "label --method oracle --out z").code == 2);
    CHECK(cli(dir, "inpaint --image junk.nii --mask junk.nii --inpainter gan --out z").code == 2);
}

TEST_CASE("cli inpaint matches the library and checks geometry") {
    testutil::TempDir dir;
    const auto g = make_geometry({12, 11, 10});
    const auto img = testutil::affine_volume(g, 0.25, -0.5, 0.125, 4.0);
    Mask m(g);
    m(5, 5, 5) = m(6, 5, 5) = m(5, 6, 5) = 1;
    write_nifti(img, dir.path / "img.nii");
    write_nifti(m, dir.path / "mask.nii");
    const auto r = cli(dir, "inpaint --image img.nii --mask mask.nii --out inp");
    REQUIRE(r.code == 0);
    const auto out = read_nifti_scalar(dir.path / "inp" / "inpainted.nii");
    const auto ref = run_inpainter(read_nifti_scalar(dir.path / "img.nii"), m, Inpainter{});
    for (std::size_t i = 0; i < out.size(); ++i) REQUIRE(out[i] == static_cast<double>(static_cast<float>(ref[i])));

    write_nifti(Mask(make_geometry({12, 11, 9})), dir.path / "small.nii");
    CHECK(cli(dir, "inpaint --image img.nii --mask small.nii --out bad").code == 3);
    CHECK_FALSE(fs::exists(dir.path / "bad"));
}

TEST_CASE("cli synth writes exactly the case files") {
    testutil::TempDir dir;
    const auto r = cli(dir, "synth --p 26 22 18 --out case");
    REQUIRE(r.code == 0);
    CHECK(file_count(dir.path / "case") == 9);
    for (const char *f : {"healthy.nii", "core.nii", "lesioned.nii", "core_mask.nii", "final_mask.nii", "gt_velocity_dx.nii", "gt_velocity_dy.nii",
                          "gt_velocity_dz.nii", "params.json"})
        CHECK(fs::exists(dir.path / "case" / f));
    const auto params = nlohmann::json::parse(slurp(dir.path / "case" / "params.json"));
    CHECK(params["synthesis"]["p_lesion"][0] == 26.0);
    CHECK(params["expansion_dice"].get<double>() >= 0.85);
    CHECK(params["gt_velocity"]["kind"] == "velocity");
    CHECK(params.contains("config"));
    CHECK(read_nifti_mask(dir.path / "case" / "final_mask.nii").geometry() == make_phantom({}).image.geometry());

    // placement outside the brain is a numerical failure, not a crash
    CHECK(cli(dir, "synth --p 1 1 1 --out corner").code == 4);
    CHECK_FALSE(fs::exists(dir.path / "corner"));
}
