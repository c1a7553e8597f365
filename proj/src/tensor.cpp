// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include "revunet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace revunet {

const char* precision_name(Precision p) { return p == Precision::f32 ? "single" : "double"; }

Precision parse_precision(const std::string& s) {
    if (s == "single" || s == "f32" || s == "float") return Precision::f32;
    if (s == "double" || s == "f64") return Precision::f64;
    throw std::invalid_argument("unknown precision '" + s + "' (expected single or double)");
}

std::string Shape5::str() const {
    std::ostringstream os;
    os << "(" << n << "," << c << "," << d << "," << h << "," << w << ")";
    return os.str();
}

void validate_shape(const Shape5& s) {
    for (auto v : s.dims()) {
        if (v == 0) throw ShapeError("shape " + s.str() + " has a zero extent");
    }
}

template <typename T>
Tensor5<T>::Tensor5(const Shape5& shape, T fill) : shape_(shape) {
    validate_shape(shape);
    data_.assign(shape.numel(), fill);
}

template <typename T>
Tensor5<T>::Tensor5(const Shape5& shape, std::vector<T> values)
    : shape_(shape), data_(std::move(values)) {
    validate_shape(shape);
    if (data_.size() != shape.numel()) {
        throw ShapeError("shape " + shape.str() + " needs " + std::to_string(shape.numel()) +
                         " values, got " + std::to_string(data_.size()));
    }
}

template <typename T>
void Tensor5<T>::fill(T v) {
    std::fill(data_.begin(), data_.end(), v);
}

template class Tensor5<float>;
template class Tensor5<double>;

namespace {

void require_same_shape(const Shape5& a, const Shape5& b, const char* what) {
    if (!(a == b)) throw ShapeError(std::string(what) + ": shape mismatch " + a.str() + " vs " + b.str());
}

}  // namespace

template <typename T>
std::pair<Tensor5<T>, Tensor5<T>> channel_split(const Tensor5<T>& t) {
    const Shape5& s = t.shape();
    if (s.c % 2 != 0) throw ShapeError("channel_split: odd channel count " + std::to_string(s.c));
    Shape5 half = s;
    half.c = s.c / 2;
    Tensor5<T> a(half), b(half);
    const std::size_t block = half.c * s.spatial();
    for (std::size_t n = 0; n < s.n; ++n) {
        const T* src = t.raw() + n * s.c * s.spatial();
        std::copy_n(src, block, a.raw() + n * block);
        std::copy_n(src + block, block, b.raw() + n * block);
    }
    return {std::move(a), std::move(b)};
}

template <typename T>
Tensor5<T> channel_concat(const Tensor5<T>& a, const Tensor5<T>& b) {
    const Shape5& sa = a.shape();
    const Shape5& sb = b.shape();
    if (sa.n != sb.n || !sa.same_spatial(sb)) {
        throw ShapeError("channel_concat: incompatible shapes " + sa.str() + " and " + sb.str());
    }
    Shape5 out_shape = sa;
    out_shape.c = sa.c + sb.c;
    Tensor5<T> out(out_shape);
    const std::size_t ba = sa.c * sa.spatial();
    const std::size_t bb = sb.c * sb.spatial();
    for (std::size_t n = 0; n < sa.n; ++n) {
        T* dst = out.raw() + n * (ba + bb);
        std::copy_n(a.raw() + n * ba, ba, dst);
        std::copy_n(b.raw() + n * bb, bb, dst + ba);
    }
    return out;
}

template <typename T>
Tensor5<T> ew_add(const Tensor5<T>& a, const Tensor5<T>& b) {
    require_same_shape(a.shape(), b.shape(), "ew_add");
    Tensor5<T> out(a.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a[i] + b[i];
    return out;
}

template <typename T>
Tensor5<T> ew_sub(const Tensor5<T>& a, const Tensor5<T>& b) {
    require_same_shape(a.shape(), b.shape(), "ew_sub");
    Tensor5<T> out(a.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a[i] - b[i];
    return out;
}

template <typename T>
void add_inplace(Tensor5<T>& a, const Tensor5<T>& b) {
    require_same_shape(a.shape(), b.shape(), "add_inplace");
    T* pa = a.raw();
    const T* pb = b.raw();
    for (std::size_t i = 0; i < a.numel(); ++i) pa[i] += pb[i];
}

template <typename T>
Tensor5<T> scaled(const Tensor5<T>& a, T factor) {
    Tensor5<T> out(a.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a[i] * factor;
    return out;
}

template <typename T>
bool bitwise_equal(const Tensor5<T>& a, const Tensor5<T>& b) {
    if (!(a.shape() == b.shape())) return false;
    return std::memcmp(a.raw(), b.raw(), a.numel() * sizeof(T)) == 0;
}

template <typename T>
double max_abs_diff(const Tensor5<T>& a, const Tensor5<T>& b) {
    require_same_shape(a.shape(), b.shape(), "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    }
    return m;
}

template <typename T>
double max_abs(const Tensor5<T>& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i])));
    return m;
}

#define REVUNET_INSTANTIATE(T)                                                       \
    template std::pair<Tensor5<T>, Tensor5<T>> channel_split(const Tensor5<T>&);     \
    template Tensor5<T> channel_concat(const Tensor5<T>&, const Tensor5<T>&);        \
    template Tensor5<T> ew_add(const Tensor5<T>&, const Tensor5<T>&);                \
    template Tensor5<T> ew_sub(const Tensor5<T>&, const Tensor5<T>&);                \
    template void add_inplace(Tensor5<T>&, const Tensor5<T>&);                       \
    template Tensor5<T> scaled(const Tensor5<T>&, T);                                \
    template bool bitwise_equal(const Tensor5<T>&, const Tensor5<T>&);               \
    template double max_abs_diff(const Tensor5<T>&, const Tensor5<T>&);              \
    template double max_abs(const Tensor5<T>&);

REVUNET_INSTANTIATE(float)
REVUNET_INSTANTIATE(double)
#undef REVUNET_INSTANTIATE

}  // namespace revunet
