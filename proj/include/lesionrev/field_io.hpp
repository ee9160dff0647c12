#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "lesionrev/field.hpp"

namespace lesionrev {

// A field persists as <stem>_dx.nii, <stem>_dy.nii, <stem>_dz.nii plus a JSON
// sidecar {"kind": ..., "steps": ...}.
nlohmann::json field_sidecar(const VectorField &f, int steps);

void write_field_components(const VectorField &f, const std::filesystem::path &dir, const std::string &stem);
void write_field(const VectorField &f, const std::filesystem::path &dir, const std::string &stem, int steps);

// Reads <stem>.json for the kind unless `kind` is given.
VectorField read_field(const std::filesystem::path &dir, const std::string &stem, std::optional<FieldKind> kind = std::nullopt);

} // namespace lesionrev
