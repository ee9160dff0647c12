#include "lesionrev/field_io.hpp"

#include <fstream>

#include "lesionrev/nifti.hpp"

namespace lesionrev {

namespace {

const char *kSuffix[3] = {"_dx.nii", "_dy.nii", "_dz.nii"};

} // namespace

nlohmann::json field_sidecar(const VectorField &f, int steps) {
    return nlohmann::json{{"kind", to_string(f.kind())}, {"steps", steps}};
}

void write_field_components(const VectorField &f, const std::filesystem::path &dir, const std::string &stem) {
    for (int a = 0; a < 3; ++a) {
        ScalarVolume c(f.geometry());
        for (std::size_t i = 0; i < f.size(); ++i) c[i] = f[i][a];
        write_nifti(c, dir / (stem + kSuffix[a]));
    }
}

void write_field(const VectorField &f, const std::filesystem::path &dir, const std::string &stem, int steps) {
    write_field_components(f, dir, stem);
    std::ofstream os(dir / (stem + ".json"));
    if (!os) throw std::runtime_error("cannot write field sidecar in " + dir.string());
    os << field_sidecar(f, steps).dump(2) << "\n";
}

VectorField read_field(const std::filesystem::path &dir, const std::string &stem, std::optional<FieldKind> kind) {
    if (!kind) {
        std::ifstream is(dir / (stem + ".json"));
        if (!is) throw std::runtime_error("missing field sidecar: " + (dir / (stem + ".json")).string());
        const auto j = nlohmann::json::parse(is);
        kind = field_kind_from_string(j.at("kind").get<std::string>());
    }
    std::array<ScalarVolume, 3> c{read_nifti_scalar(dir / (stem + kSuffix[0])), read_nifti_scalar(dir / (stem + kSuffix[1])),
                                  read_nifti_scalar(dir / (stem + kSuffix[2]))};
    require_same_geometry(c[0].geometry(), c[1].geometry(), "read_field");
    require_same_geometry(c[0].geometry(), c[2].geometry(), "read_field");
    std::vector<Vec3> data(c[0].size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = {c[0][i], c[1][i], c[2][i]};
    return VectorField(c[0].geometry(), *kind, std::move(data));
}

} // namespace lesionrev
