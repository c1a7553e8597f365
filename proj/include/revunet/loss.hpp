// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "revunet/labels.hpp"
#include "revunet/tensor.hpp"

namespace revunet {

template <typename T>
struct DiceLoss {
    double loss = 0.0;
    Tensor5<T> dlogits;
    std::vector<double> soft_dice;  // per class
};

// p = softmax over channels, y = one-hot labels, s = smoothing:
//   loss = 1 - mean_c (2 sum p_c y_c + s) / (sum p_c + sum y_c + s)
template <typename T>
DiceLoss<T> soft_dice_loss(const Tensor5<T>& logits, const LabelMap& labels, double smoothing = 1.0);

// 2|A ∩ B| / (|A| + |B|) for one class; 1 when the class is absent from both.
double dice_score(const LabelMap& pred, const LabelMap& truth, std::uint8_t cls);
std::vector<double> per_class_dice(const LabelMap& pred, const LabelMap& truth, std::size_t num_classes);
double mean_dice(const LabelMap& pred, const LabelMap& truth, std::size_t num_classes);

}  // namespace revunet
