#include "lesionrev/nifti.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

namespace lesionrev {

static_assert(std::endian::native == std::endian::little, "NIfTI layer assumes a little-endian host");

namespace {

// Byte offsets into the 348-byte NIfTI-1 header.
constexpr std::size_t kOffSizeofHdr = 0;
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffSformCode = 254;
constexpr std::size_t kOffSrowX = 280;
constexpr std::size_t kOffMagic = 344;

template <class T>
void put(std::vector<char> &buf, std::size_t off, T v) {
    std::memcpy(buf.data() + off, &v, sizeof(T));
}

template <class T>
T get(const std::vector<char> &buf, std::size_t off) {
    T v;
    std::memcpy(&v, buf.data() + off, sizeof(T));
    return v;
}

int bytes_per_voxel(NiftiDatatype dt) {
    switch (dt) {
    case NiftiDatatype::uint8: return 1;
    case NiftiDatatype::int16: return 2;
    case NiftiDatatype::float32: return 4;
    }
    return 0;
}

std::vector<char> make_header(const GridGeometry &g, NiftiDatatype dt) {
    std::vector<char> h(kNiftiVoxOffset, 0);
    put<std::int32_t>(h, kOffSizeofHdr, kNiftiHeaderSize);
    const std::array<std::int16_t, 8> dim{3, static_cast<std::int16_t>(g.dims[0]), static_cast<std::int16_t>(g.dims[1]),
                                          static_cast<std::int16_t>(g.dims[2]), 1, 1, 1, 1};
    for (std::size_t i = 0; i < 8; ++i) put<std::int16_t>(h, kOffDim + 2 * i, dim[i]);
    put<std::int16_t>(h, kOffDatatype, static_cast<std::int16_t>(dt));
    put<std::int16_t>(h, kOffBitpix, static_cast<std::int16_t>(8 * bytes_per_voxel(dt)));
    const std::array<float, 8> pixdim{1.0f, static_cast<float>(g.spacing[0]), static_cast<float>(g.spacing[1]),
                                      static_cast<float>(g.spacing[2]), 0, 0, 0, 0};
    for (std::size_t i = 0; i < 8; ++i) put<float>(h, kOffPixdim + 4 * i, pixdim[i]);
    put<float>(h, kOffVoxOffset, static_cast<float>(kNiftiVoxOffset));
    put<float>(h, kOffSclSlope, 1.0f);
    put<float>(h, kOffSclInter, 0.0f);
    put<std::int16_t>(h, kOffSformCode, 1);
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            put<float>(h, kOffSrowX + 16 * r + 4 * c, r == c ? static_cast<float>(g.spacing[r]) : 0.0f);
        }
        put<float>(h, kOffSrowX + 16 * r + 12, static_cast<float>(g.origin[r]));
    }
    std::memcpy(h.data() + kOffMagic, "n+1\0", 4);
    return h;
}

template <class Raw>
void write_payload(const std::filesystem::path &path, const GridGeometry &g, NiftiDatatype dt, const std::vector<Raw> &raw) {
    if (g.dims[0] > 32767 || g.dims[1] > 32767 || g.dims[2] > 32767) {
        throw NiftiError(NiftiErrorKind::unsupported_layout, "grid too large for NIfTI-1 dim field");
    }
    const auto header = make_header(g, dt);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw NiftiError(NiftiErrorKind::io, "cannot open for writing: " + path.string());
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    os.write(reinterpret_cast<const char *>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(Raw)));
    if (!os) throw NiftiError(NiftiErrorKind::io, "write failed: " + path.string());
}

struct RawImage {
    NiftiInfo info;
    std::vector<char> payload;
};

RawImage read_raw(const std::filesystem::path &path, bool with_payload) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw NiftiError(NiftiErrorKind::io, "cannot open: " + path.string());
    std::vector<char> h(kNiftiHeaderSize);
    is.read(h.data(), kNiftiHeaderSize);
    if (is.gcount() != kNiftiHeaderSize) throw NiftiError(NiftiErrorKind::truncated, "truncated header: " + path.string());
    if (get<std::int32_t>(h, kOffSizeofHdr) != kNiftiHeaderSize) {
        throw NiftiError(NiftiErrorKind::bad_header_size, "sizeof_hdr != 348 (big-endian or not NIfTI-1): " + path.string());
    }
    if (std::memcmp(h.data() + kOffMagic, "n+1\0", 4) != 0) {
        throw NiftiError(NiftiErrorKind::bad_magic, "not NIfTI-1 single-file: " + path.string());
    }
    const auto code = get<std::int16_t>(h, kOffDatatype);
    if (code != 2 && code != 4 && code != 16) {
        throw NiftiError(NiftiErrorKind::unsupported_datatype, "unsupported datatype code " + std::to_string(code));
    }
    const auto ndim = get<std::int16_t>(h, kOffDim);
    if (ndim < 3 || ndim > 7) throw NiftiError(NiftiErrorKind::unsupported_layout, "dim[0] must be 3");
    for (std::size_t i = 4; i <= static_cast<std::size_t>(ndim); ++i) {
        if (get<std::int16_t>(h, kOffDim + 2 * i) > 1) throw NiftiError(NiftiErrorKind::unsupported_layout, "multi-frame volumes unsupported");
    }
    const float slope = get<float>(h, kOffSclSlope), inter = get<float>(h, kOffSclInter);
    if (!(slope == 0.0f || slope == 1.0f) || inter != 0.0f) {
        throw NiftiError(NiftiErrorKind::unsupported_layout, "intensity scaling (scl_slope/scl_inter) unsupported");
    }
    RawImage out;
    auto &g = out.info.geometry;
    for (std::size_t a = 0; a < 3; ++a) {
        g.dims[a] = get<std::int16_t>(h, kOffDim + 2 * (a + 1));
        g.spacing[a] = get<float>(h, kOffPixdim + 4 * (a + 1));
        g.origin[a] = get<std::int16_t>(h, kOffSformCode) > 0 ? get<float>(h, kOffSrowX + 16 * a + 12) : 0.0;
    }
    try {
        g.validate();
    } catch (const std::invalid_argument &e) {
        throw NiftiError(NiftiErrorKind::unsupported_layout, e.what());
    }
    out.info.datatype = static_cast<NiftiDatatype>(code);
    if (!with_payload) return out;

    const auto vox_offset = static_cast<std::streamoff>(get<float>(h, kOffVoxOffset));
    if (vox_offset < kNiftiHeaderSize) throw NiftiError(NiftiErrorKind::unsupported_layout, "vox_offset < 348");
    const std::size_t bytes = g.voxel_count() * static_cast<std::size_t>(bytes_per_voxel(out.info.datatype));
    is.seekg(vox_offset);
    out.payload.resize(bytes);
    is.read(out.payload.data(), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(is.gcount()) != bytes) {
        throw NiftiError(NiftiErrorKind::truncated, "truncated payload: expected " + std::to_string(bytes) + " bytes in " + path.string());
    }
    return out;
}

template <class Raw>
std::vector<Raw> decode(const RawImage &img) {
    std::vector<Raw> v(img.info.geometry.voxel_count());
    std::memcpy(v.data(), img.payload.data(), v.size() * sizeof(Raw));
    return v;
}

ScalarVolume to_scalar_volume(const RawImage &img) {
    std::vector<double> data(img.info.geometry.voxel_count());
    switch (img.info.datatype) {
    case NiftiDatatype::uint8: { auto r = decode<std::uint8_t>(img); std::copy(r.begin(), r.end(), data.begin()); break; }
    case NiftiDatatype::int16: { auto r = decode<std::int16_t>(img); std::copy(r.begin(), r.end(), data.begin()); break; }
    case NiftiDatatype::float32: { auto r = decode<float>(img); std::copy(r.begin(), r.end(), data.begin()); break; }
    }
    return ScalarVolume(img.info.geometry, std::move(data));
}

LabelVolume to_label_volume(const RawImage &img) {
    std::vector<std::int32_t> data(img.info.geometry.voxel_count());
    switch (img.info.datatype) {
    case NiftiDatatype::uint8: { auto r = decode<std::uint8_t>(img); std::copy(r.begin(), r.end(), data.begin()); break; }
    case NiftiDatatype::int16: { auto r = decode<std::int16_t>(img); std::copy(r.begin(), r.end(), data.begin()); break; }
    case NiftiDatatype::float32:
        throw NiftiError(NiftiErrorKind::unsupported_datatype, "float32 volume cannot be read as labels");
    }
    for (auto v : data) {
        if (v < 0) throw NiftiError(NiftiErrorKind::value_range, "negative label in label volume");
    }
    return LabelVolume(img.info.geometry, std::move(data));
}

Mask to_mask(const RawImage &img) {
    if (img.info.datatype != NiftiDatatype::uint8) {
        throw NiftiError(NiftiErrorKind::unsupported_datatype, "masks must be stored as uint8");
    }
    auto r = decode<std::uint8_t>(img);
    for (auto &v : r) v = v ? 1 : 0;
    return Mask(img.info.geometry, std::move(r));
}

} // namespace

NiftiInfo read_nifti_info(const std::filesystem::path &path) { return read_raw(path, false).info; }

AnyVolume read_nifti(const std::filesystem::path &path) {
    const auto img = read_raw(path, true);
    switch (img.info.datatype) {
    case NiftiDatatype::uint8: return to_mask(img);
    case NiftiDatatype::int16: return to_label_volume(img);
    case NiftiDatatype::float32: return to_scalar_volume(img);
    }
    throw NiftiError(NiftiErrorKind::unsupported_datatype, "unreachable datatype");
}

ScalarVolume read_nifti_scalar(const std::filesystem::path &path) { return to_scalar_volume(read_raw(path, true)); }
LabelVolume read_nifti_labels(const std::filesystem::path &path) { return to_label_volume(read_raw(path, true)); }
Mask read_nifti_mask(const std::filesystem::path &path) { return to_mask(read_raw(path, true)); }

void write_nifti(const ScalarVolume &vol, const std::filesystem::path &path) {
    std::vector<float> raw(vol.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!std::isfinite(vol[i])) throw NiftiError(NiftiErrorKind::value_range, "non-finite voxel value");
        raw[i] = static_cast<float>(vol[i]);
    }
    write_payload(path, vol.geometry(), NiftiDatatype::float32, raw);
}

void write_nifti(const LabelVolume &vol, const std::filesystem::path &path) {
    std::vector<std::int16_t> raw(vol.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (vol[i] < 0 || vol[i] > std::numeric_limits<std::int16_t>::max()) {
            throw NiftiError(NiftiErrorKind::value_range, "label out of int16 range");
        }
        raw[i] = static_cast<std::int16_t>(vol[i]);
    }
    write_payload(path, vol.geometry(), NiftiDatatype::int16, raw);
}

void write_nifti(const Mask &vol, const std::filesystem::path &path) {
    std::vector<std::uint8_t> raw(vol.data().begin(), vol.data().end());
    for (auto &v : raw) v = v ? 1 : 0;
    write_payload(path, vol.geometry(), NiftiDatatype::uint8, raw);
}

} // namespace lesionrev
