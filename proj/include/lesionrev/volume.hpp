#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lesionrev/geometry.hpp"

namespace lesionrev {

template <class T>
class Volume {
public:
    using value_type = T;

    Volume() = default;
    explicit Volume(GridGeometry geometry, T fill = T{})
        : geometry_(std::move(geometry)) {
        geometry_.validate();
        data_.assign(geometry_.voxel_count(), fill);
    }
    Volume(GridGeometry geometry, std::vector<T> data)
        : geometry_(std::move(geometry)), data_(std::move(data)) {
        geometry_.validate();
        if (data_.size() != geometry_.voxel_count()) {
            throw std::invalid_argument("volume data length does not match grid dimensions");
        }
    }

    const GridGeometry &geometry() const { return geometry_; }
    const std::array<int, 3> &dims() const { return geometry_.dims; }
    std::size_t size() const { return data_.size(); }

    std::span<const T> data() const { return data_; }
    std::span<T> data() { return data_; }
    const std::vector<T> &values() const { return data_; }

    const T &operator[](std::size_t i) const { return data_[i]; }
    T &operator[](std::size_t i) { return data_[i]; }
    const T &operator()(int x, int y, int z) const { return data_[geometry_.index(x, y, z)]; }
    T &operator()(int x, int y, int z) { return data_[geometry_.index(x, y, z)]; }

    bool operator==(const Volume &) const = default;

private:
    GridGeometry geometry_{};
    std::vector<T> data_;
};

using ScalarVolume = Volume<double>;
using LabelVolume = Volume<std::int32_t>;
using Mask = Volume<std::uint8_t>;

template <class T>
std::size_t count_nonzero(const Volume<T> &v) {
    std::size_t n = 0;
    for (const auto &x : v.data()) n += (x != T{}) ? 1 : 0;
    return n;
}

} // namespace lesionrev
