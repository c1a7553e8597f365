// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "revunet/tensor.hpp"

namespace revunet {

// Integer class map over (d, h, w), row-major with w fastest.
struct LabelMap {
    std::array<std::size_t, 3> dims{1, 1, 1};
    std::vector<std::uint8_t> data;

    LabelMap() : data(1, 0) {}
    explicit LabelMap(std::array<std::size_t, 3> extent, std::uint8_t fill = 0)
        : dims(extent), data(extent[0] * extent[1] * extent[2], fill) {}

    std::size_t size() const { return data.size(); }
    std::size_t index(std::size_t d, std::size_t h, std::size_t w) const { return (d * dims[1] + h) * dims[2] + w; }
    std::uint8_t& at(std::size_t d, std::size_t h, std::size_t w) { return data[index(d, h, w)]; }
    std::uint8_t at(std::size_t d, std::size_t h, std::size_t w) const { return data[index(d, h, w)]; }

    friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

inline void check_label_range(const LabelMap& l, std::size_t num_classes) {
    for (auto v : l.data) {
        if (v >= num_classes) {
            throw std::invalid_argument("label value " + std::to_string(v) + " outside [0, " +
                                        std::to_string(num_classes) + ")");
        }
    }
}

// Labels as a (1, 1, d, h, w) tensor, for the shared RVT1 file format.
template <typename T>
Tensor5<T> labels_to_tensor(const LabelMap& l) {
    std::vector<T> v(l.data.begin(), l.data.end());
    return Tensor5<T>(Shape5{1, 1, l.dims[0], l.dims[1], l.dims[2]}, std::move(v));
}

template <typename T>
LabelMap labels_from_tensor(const Tensor5<T>& t) {
    const Shape5& s = t.shape();
    if (s.n != 1 || s.c != 1) throw ShapeError("label tensor must have shape (1,1,d,h,w), got " + s.str());
    LabelMap l({s.d, s.h, s.w});
    for (std::size_t i = 0; i < l.size(); ++i) {
        const T v = t[i];
        if (!(v >= 0) || v > 255 || v != static_cast<T>(static_cast<int>(v))) {
            throw std::invalid_argument("label tensor holds non-integer or out-of-range value");
        }
        l.data[i] = static_cast<std::uint8_t>(v);
    }
    return l;
}

}  // namespace revunet
