#pragma once

// NIfTI-1 single-file (.nii) subset: uncompressed little-endian, 3D, datatypes
// uint8 (2), int16 (4) and float32 (16).

#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>

#include "lesionrev/volume.hpp"

namespace lesionrev {

enum class NiftiErrorKind { io, bad_header_size, bad_magic, unsupported_datatype, unsupported_layout, truncated, value_range };

class NiftiError : public std::runtime_error {
public:
    NiftiError(NiftiErrorKind kind, const std::string &msg) : std::runtime_error(msg), kind_(kind) {}
    NiftiErrorKind kind() const { return kind_; }

private:
    NiftiErrorKind kind_;
};

inline constexpr int kNiftiHeaderSize = 348;
inline constexpr int kNiftiVoxOffset = 352;

enum class NiftiDatatype : short { uint8 = 2, int16 = 4, float32 = 16 };

struct NiftiInfo {
    GridGeometry geometry;
    NiftiDatatype datatype = NiftiDatatype::float32;
};

using AnyVolume = std::variant<ScalarVolume, LabelVolume, Mask>;

NiftiInfo read_nifti_info(const std::filesystem::path &path);

// float32 -> ScalarVolume, int16 -> LabelVolume, uint8 -> Mask.
AnyVolume read_nifti(const std::filesystem::path &path);

// Typed readers convert from any supported datatype where that is lossless.
ScalarVolume read_nifti_scalar(const std::filesystem::path &path);
LabelVolume read_nifti_labels(const std::filesystem::path &path);
Mask read_nifti_mask(const std::filesystem::path &path);

void write_nifti(const ScalarVolume &vol, const std::filesystem::path &path); // float32
void write_nifti(const LabelVolume &vol, const std::filesystem::path &path);  // int16
void write_nifti(const Mask &vol, const std::filesystem::path &path);         // uint8

} // namespace lesionrev
