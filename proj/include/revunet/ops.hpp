// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Forward and vector-Jacobian-product kernels for the primitives used by the
// network. All convolutions are stride 1 with zero "same" padding; spatial
// resolution only changes through maxpool3d and trilinear_upsample.
//
// Weight layouts:
//   standard   (out_ch, in_ch, k, k, k)
//   pointwise  (out_ch, in_ch, 1, 1, 1)
//   depthwise  (ch, 1, k, k, k)
// Per-channel vectors (bias, gamma, beta) are plain spans of length ch.

#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "revunet/tensor.hpp"

namespace revunet {

template <typename T>
struct ConvGrads {
    Tensor5<T> dx;
    Tensor5<T> dweight;
    std::vector<T> dbias;  // empty when the conv has no bias
};

template <typename T>
Tensor5<T> conv3d(const Tensor5<T>& x, const Tensor5<T>& weights, std::span<const T> bias = {});

template <typename T>
Tensor5<T> pointwise_conv3d(const Tensor5<T>& x, const Tensor5<T>& weights,
                            std::span<const T> bias = {});

template <typename T>
Tensor5<T> depthwise_conv3d(const Tensor5<T>& x, const Tensor5<T>& weights,
                            std::span<const T> bias = {});

template <typename T>
ConvGrads<T> conv3d_vjp(const Tensor5<T>& x, const Tensor5<T>& weights, bool has_bias,
                        const Tensor5<T>& dy);

template <typename T>
ConvGrads<T> pointwise_conv3d_vjp(const Tensor5<T>& x, const Tensor5<T>& weights, bool has_bias,
                                  const Tensor5<T>& dy);

template <typename T>
ConvGrads<T> depthwise_conv3d_vjp(const Tensor5<T>& x, const Tensor5<T>& weights, bool has_bias,
                                  const Tensor5<T>& dy);

struct GroupNormSpec {
    std::size_t group_size = 10;  // channels per group
    double eps = 1e-5;
};

// 10 channels per group when it divides the width, otherwise a single group.
std::size_t default_group_size(std::size_t channels, std::size_t preferred = 10);

// Per (sample, group) statistics, index n * groups + g.
template <typename T>
struct GroupNormStats {
    std::vector<T> mean;
    std::vector<T> rstd;
};

template <typename T>
Tensor5<T> group_norm(const Tensor5<T>& x, std::span<const T> gamma, std::span<const T> beta,
                      const GroupNormSpec& spec, GroupNormStats<T>* stats = nullptr);

template <typename T>
struct GroupNormGrads {
    Tensor5<T> dx;
    std::vector<T> dgamma;
    std::vector<T> dbeta;
};

template <typename T>
GroupNormGrads<T> group_norm_vjp(const Tensor5<T>& x, std::span<const T> gamma,
                                 const GroupNormSpec& spec, const GroupNormStats<T>& stats,
                                 const Tensor5<T>& dy);

// cap = +inf gives ReLU, cap = 6 gives ReLU6.
template <typename T>
Tensor5<T> relu(const Tensor5<T>& x, double cap = std::numeric_limits<double>::infinity());

// Gradient from the saved forward output.
template <typename T>
Tensor5<T> relu_vjp(const Tensor5<T>& output, const Tensor5<T>& dy,
                    double cap = std::numeric_limits<double>::infinity());

template <typename T>
struct MaxPoolResult {
    Tensor5<T> output;
    // Flat d*h*w index inside the (n, c) input plane, one per output element.
    std::vector<std::uint32_t> argmax;
};

template <typename T>
MaxPoolResult<T> maxpool3d(const Tensor5<T>& x);

template <typename T>
Tensor5<T> maxpool3d_vjp(const Shape5& input_shape, std::span<const std::uint32_t> argmax,
                         const Tensor5<T>& dy);

// Scale factor 2 on every spatial axis, align_corners = false.
template <typename T>
Tensor5<T> trilinear_upsample(const Tensor5<T>& x);

template <typename T>
Tensor5<T> trilinear_upsample_vjp(const Shape5& input_shape, const Tensor5<T>& dy);

}  // namespace revunet
