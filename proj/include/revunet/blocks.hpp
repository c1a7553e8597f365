// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Composite blocks expressed as op sequences over a parameter store.
//
// MBConv (channels C, expand ratio t), shape preserving:
//   expand  pointwise C -> tC, GN, ReLU
//   depthwise 3x3x3 on tC, GN, ReLU
//   project pointwise tC -> C, GN          (linear bottleneck: no trailing ReLU)
// Standard block: conv 3x3x3 C -> C, GN, ReLU.
// None of these convolutions carry a bias; the following GN beta covers it.

#pragma once

#include <cstdint>
#include <limits>
#include <string>

#include "revunet/graph.hpp"
#include "revunet/params.hpp"

namespace revunet {

enum class BlockKind { standard, mbconv };

const char* block_kind_name(BlockKind k);
BlockKind parse_block_kind(const std::string& s);

struct NormOptions {
    std::size_t preferred_group_size = 10;
    double eps = 1e-5;
    double relu_cap = std::numeric_limits<double>::infinity();

    GroupNormSpec spec_for(std::size_t channels) const {
        return {default_group_size(channels, preferred_group_size), eps};
    }
};

// He-normal weight N(0, gain^2 * 2 / fan_in), seeded per parameter name.
template <typename T>
std::size_t add_he_normal(ParamStore<T>& p, const std::string& name, const Shape5& shape,
                          std::size_t fan_in, std::uint64_t seed, double gain = 1.0);

// Per-channel vector stored as a (1, count, 1, 1, 1) tensor.
template <typename T>
std::size_t add_channel_vector(ParamStore<T>& p, const std::string& name, std::size_t count, T value);

template <typename T>
OpSequence build_mbconv_block(ParamStore<T>& p, const std::string& prefix, std::size_t channels,
                              std::size_t expand_ratio, const NormOptions& norm, std::uint64_t seed);

template <typename T>
OpSequence build_standard_block(ParamStore<T>& p, const std::string& prefix, std::size_t channels,
                                const NormOptions& norm, std::uint64_t seed);

template <typename T>
OpSequence build_block(BlockKind kind, ParamStore<T>& p, const std::string& prefix,
                       std::size_t channels, std::size_t expand_ratio, const NormOptions& norm,
                       std::uint64_t seed) {
    return kind == BlockKind::mbconv ? build_mbconv_block(p, prefix, channels, expand_ratio, norm, seed)
                                     : build_standard_block(p, prefix, channels, norm, seed);
}

// 2tC^2 + 27tC + 4tC + 2C
std::size_t mbconv_param_count(std::size_t channels, std::size_t expand_ratio);
// 27C^2 + 2C
std::size_t standard_block_param_count(std::size_t channels);

// Counts the scalars of every distinct parameter the sequence references.
template <typename T>
std::size_t param_count(const OpSequence& ops, const ParamStore<T>& p);

template <typename T>
Tensor5<T> mbconv_forward(const OpSequence& block, const ParamStore<T>& p, const Tensor5<T>& x) {
    return run_sequence(block, p, x);
}

}  // namespace revunet
