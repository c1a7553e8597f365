// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include "revunet/blocks.hpp"

#include <cmath>
#include <set>

#include "revunet/rng.hpp"

namespace revunet {

const char* block_kind_name(BlockKind k) { return k == BlockKind::mbconv ? "mbconv" : "standard"; }

BlockKind parse_block_kind(const std::string& s) {
    if (s == "mbconv") return BlockKind::mbconv;
    if (s == "standard") return BlockKind::standard;
    throw std::invalid_argument("unknown block kind '" + s + "' (expected standard or mbconv)");
}

template <typename T>
std::size_t add_he_normal(ParamStore<T>& p, const std::string& name, const Shape5& shape,
                          std::size_t fan_in, std::uint64_t seed, double gain) {
    Rng rng(derive_seed(seed, name));
    const double stddev = gain * std::sqrt(2.0 / static_cast<double>(fan_in));
    std::vector<T> v(shape.numel());
    for (auto& e : v) e = static_cast<T>(stddev * rng.normal());
    return p.add(name, Tensor5<T>(shape, std::move(v)));
}

template <typename T>
std::size_t add_channel_vector(ParamStore<T>& p, const std::string& name, std::size_t count, T value) {
    return p.add(name, Tensor5<T>(Shape5{1, count, 1, 1, 1}, value));
}

namespace {

template <typename T>
OpSpec conv_op(ParamStore<T>& p, OpKind kind, const std::string& prefix, const std::string& name,
               std::size_t out_ch, std::size_t in_ch, std::size_t k, std::uint64_t seed) {
    OpSpec op;
    op.kind = kind;
    op.name = name;
    const bool dw = kind == OpKind::depthwise;
    const Shape5 shape{out_ch, dw ? 1 : in_ch, k, k, k};
    const std::size_t fan_in = (dw ? 1 : in_ch) * k * k * k;
    op.weight = static_cast<std::ptrdiff_t>(add_he_normal(p, join_id(prefix, name + ".weight"), shape, fan_in, seed));
    return op;
}

template <typename T>
OpSpec norm_op(ParamStore<T>& p, const std::string& prefix, const std::string& name, std::size_t ch,
               const NormOptions& norm) {
    OpSpec op;
    op.kind = OpKind::group_norm;
    op.name = name;
    op.norm = norm.spec_for(ch);
    op.gamma = static_cast<std::ptrdiff_t>(add_channel_vector(p, join_id(prefix, name + ".gamma"), ch, T(1)));
    op.beta = static_cast<std::ptrdiff_t>(add_channel_vector(p, join_id(prefix, name + ".beta"), ch, T(0)));
    return op;
}

OpSpec relu_op(const std::string& name, const NormOptions& norm) {
    OpSpec op;
    op.kind = OpKind::relu;
    op.name = name;
    op.relu_cap = norm.relu_cap;
    return op;
}

}  // namespace

template <typename T>
OpSequence build_mbconv_block(ParamStore<T>& p, const std::string& prefix, std::size_t channels,
                              std::size_t expand_ratio, const NormOptions& norm, std::uint64_t seed) {
    if (channels == 0 || expand_ratio == 0) throw std::invalid_argument("MBConv needs channels >= 1 and expand ratio >= 1");
    const std::size_t wide = channels * expand_ratio;
    OpSequence ops;
    ops.push_back(conv_op(p, OpKind::pointwise, prefix, "expand", wide, channels, 1, seed));
    ops.push_back(norm_op(p, prefix, "expand_gn", wide, norm));
    ops.push_back(relu_op("expand_relu", norm));
    ops.push_back(conv_op(p, OpKind::depthwise, prefix, "depthwise", wide, wide, 3, seed));
    ops.push_back(norm_op(p, prefix, "depthwise_gn", wide, norm));
    ops.push_back(relu_op("depthwise_relu", norm));
    ops.push_back(conv_op(p, OpKind::pointwise, prefix, "project", channels, wide, 1, seed));
    ops.push_back(norm_op(p, prefix, "project_gn", channels, norm));
    return ops;
}

template <typename T>
OpSequence build_standard_block(ParamStore<T>& p, const std::string& prefix, std::size_t channels,
                                const NormOptions& norm, std::uint64_t seed) {
    if (channels == 0) throw std::invalid_argument("standard block needs channels >= 1");
    OpSequence ops;
    ops.push_back(conv_op(p, OpKind::conv3d, prefix, "conv", channels, channels, 3, seed));
    ops.push_back(norm_op(p, prefix, "gn", channels, norm));
    ops.push_back(relu_op("relu", norm));
    return ops;
}

std::size_t mbconv_param_count(std::size_t c, std::size_t t) {
    return 2 * t * c * c + 27 * t * c + 4 * t * c + 2 * c;
}

std::size_t standard_block_param_count(std::size_t c) { return 27 * c * c + 2 * c; }

template <typename T>
std::size_t param_count(const OpSequence& ops, const ParamStore<T>& p) {
    std::set<std::size_t> seen;
    std::size_t n = 0;
    for (std::size_t idx : referenced_params(ops)) {
        if (seen.insert(idx).second) n += p[idx].numel();
    }
    return n;
}

#define REVUNET_INSTANTIATE(T)                                                                           \
    template std::size_t add_he_normal(ParamStore<T>&, const std::string&, const Shape5&, std::size_t,   \
                                       std::uint64_t, double);                                           \
    template std::size_t add_channel_vector(ParamStore<T>&, const std::string&, std::size_t, T);         \
    template OpSequence build_mbconv_block(ParamStore<T>&, const std::string&, std::size_t, std::size_t, \
                                           const NormOptions&, std::uint64_t);                           \
    template OpSequence build_standard_block(ParamStore<T>&, const std::string&, std::size_t,            \
                                             const NormOptions&, std::uint64_t);                         \
    template std::size_t param_count(const OpSequence&, const ParamStore<T>&);

REVUNET_INSTANTIATE(float)
REVUNET_INSTANTIATE(double)
#undef REVUNET_INSTANTIATE

}  // namespace revunet
