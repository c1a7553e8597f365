// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense rank-5 tensor (batch, channel, depth, height, width), row-major with
// w fastest. This is the single value type every op in the engine consumes.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace revunet {

class ShapeError : public std::invalid_argument {
 public:
    using std::invalid_argument::invalid_argument;
};

enum class Precision : std::uint8_t { f32 = 0, f64 = 1 };

const char* precision_name(Precision p);
Precision parse_precision(const std::string& s);

template <typename T>
constexpr Precision precision_of() {
    static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
    return std::is_same_v<T, float> ? Precision::f32 : Precision::f64;
}

inline std::size_t precision_bytes(Precision p) { return p == Precision::f32 ? 4 : 8; }

struct Shape5 {
    std::size_t n = 1, c = 1, d = 1, h = 1, w = 1;

    std::size_t numel() const { return n * c * d * h * w; }
    std::size_t spatial() const { return d * h * w; }
    std::array<std::size_t, 5> dims() const { return {n, c, d, h, w}; }
    bool same_spatial(const Shape5& o) const { return d == o.d && h == o.h && w == o.w; }
    std::string str() const;

    friend bool operator==(const Shape5&, const Shape5&) = default;
};

template <typename T>
class Tensor5 {
 public:
    using value_type = T;

    Tensor5() : data_(1, T(0)) {}
    explicit Tensor5(const Shape5& shape, T fill = T(0));
    Tensor5(const Shape5& shape, std::vector<T> values);

    static Tensor5 zeros(const Shape5& shape) { return Tensor5(shape); }
    static constexpr Precision precision() { return precision_of<T>(); }

    const Shape5& shape() const { return shape_; }
    std::size_t numel() const { return data_.size(); }
    std::size_t channels() const { return shape_.c; }

    std::span<T> data() { return data_; }
    std::span<const T> data() const { return data_; }
    T* raw() { return data_.data(); }
    const T* raw() const { return data_.data(); }

    std::size_t offset(std::size_t n, std::size_t c, std::size_t d, std::size_t h,
                       std::size_t w) const {
        return (((n * shape_.c + c) * shape_.d + d) * shape_.h + h) * shape_.w + w;
    }
    T& operator()(std::size_t n, std::size_t c, std::size_t d, std::size_t h, std::size_t w) {
        return data_[offset(n, c, d, h, w)];
    }
    T operator()(std::size_t n, std::size_t c, std::size_t d, std::size_t h,
                 std::size_t w) const {
        return data_[offset(n, c, d, h, w)];
    }
    T& operator[](std::size_t i) { return data_[i]; }
    T operator[](std::size_t i) const { return data_[i]; }

    // Contiguous d*h*w block for one (n, c) pair.
    std::span<T> plane(std::size_t n, std::size_t c) {
        return std::span<T>(data_).subspan(offset(n, c, 0, 0, 0), shape_.spatial());
    }
    std::span<const T> plane(std::size_t n, std::size_t c) const {
        return std::span<const T>(data_).subspan(offset(n, c, 0, 0, 0), shape_.spatial());
    }

    void fill(T v);

 private:
    Shape5 shape_{};
    std::vector<T> data_;
};

extern template class Tensor5<float>;
extern template class Tensor5<double>;

using Tensor5f = Tensor5<float>;
using Tensor5d = Tensor5<double>;

void validate_shape(const Shape5& s);

template <typename T>
std::pair<Tensor5<T>, Tensor5<T>> channel_split(const Tensor5<T>& t);

template <typename T>
Tensor5<T> channel_concat(const Tensor5<T>& a, const Tensor5<T>& b);

template <typename T>
Tensor5<T> ew_add(const Tensor5<T>& a, const Tensor5<T>& b);

template <typename T>
Tensor5<T> ew_sub(const Tensor5<T>& a, const Tensor5<T>& b);

// a += b in place.
template <typename T>
void add_inplace(Tensor5<T>& a, const Tensor5<T>& b);

template <typename T>
Tensor5<T> scaled(const Tensor5<T>& a, T factor);

template <typename T>
bool bitwise_equal(const Tensor5<T>& a, const Tensor5<T>& b);

template <typename T>
double max_abs_diff(const Tensor5<T>& a, const Tensor5<T>& b);

template <typename T>
double max_abs(const Tensor5<T>& a);

template <typename To, typename From>
Tensor5<To> tensor_cast(const Tensor5<From>& t) {
    std::vector<To> out(t.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<To>(t[i]);
    return Tensor5<To>(t.shape(), std::move(out));
}

}  // namespace revunet
