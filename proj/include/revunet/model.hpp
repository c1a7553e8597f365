// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0
//
// The U-Net assembled from a UNetConfig.
//
// Node ids (also used by the memory planner):
//   enc{i}.pool      maxpool, levels i >= 1
//   enc{i}.raise     pointwise widths[i-1] (or in_ch) -> widths[i], with bias
//   enc{i}.rev       reversible block; F/G under enc{i}.rev.F / enc{i}.rev.G
//   dec{i}.up        trilinear upsample, i = L-2 .. 0
//   dec{i}.reduce    pointwise widths[i+1] -> widths[i], with bias, then + skip
//   dec{i}.block     standard conv block
//   head             pointwise widths[0] -> num_classes, with bias

#pragma once

#include <array>
#include <string>
#include <vector>

#include "revunet/config.hpp"
#include "revunet/labels.hpp"
#include "revunet/rev_block.hpp"

namespace revunet {

template <typename T>
class Model {
 public:
    static Model build(const UNetConfig& cfg, std::uint64_t seed);

    const UNetConfig& config() const { return cfg_; }
    const ParamStore<T>& params() const { return params_; }
    ParamStore<T>& params() { return params_; }
    const std::vector<RevBlock<T>>& rev_blocks() const { return rev_; }

    Shape5 input_shape() const;

    // Pushes every saved context onto tape when given. encoder_outputs, when
    // given, receives the output of each encoder level.
    Tensor5<T> forward(const Tensor5<T>& x, Strategy strategy = Strategy::store_all, Tape<T>* tape = nullptr,
                       std::vector<Tensor5<T>>* encoder_outputs = nullptr) const;

    // Consumes the whole tape. Returns dL/dx; parameter gradients are
    // accumulated into grads (which must come from params().zeros_like()).
    Tensor5<T> backward(Tape<T>& tape, const Tensor5<T>& dlogits, Gradients<T>& grads) const;

    Tape<T> make_tape() const { return Tape<T>(params_.version()); }

 private:
    struct Level {
        OpSpec pool;
        OpSpec raise;
    };
    struct DecoderLevel {
        OpSpec up;
        OpSpec reduce;
        OpSequence block;
    };

    UNetConfig cfg_;
    ParamStore<T> params_;
    std::vector<Level> enc_;
    std::vector<RevBlock<T>> rev_;
    std::vector<DecoderLevel> dec_;  // dec_[i] serves level i, i < L-1
    OpSpec head_;
};

extern template class Model<float>;
extern template class Model<double>;

// Zero padding applied by pad_to_grid, per axis (d, h, w).
struct CropRecord {
    std::array<std::size_t, 3> before{0, 0, 0};
    std::array<std::size_t, 3> after{0, 0, 0};
    std::array<std::size_t, 3> original{0, 0, 0};

    bool empty() const {
        return before == std::array<std::size_t, 3>{0, 0, 0} && after == std::array<std::size_t, 3>{0, 0, 0};
    }
};

CropRecord grid_padding(std::array<std::size_t, 3> extent, std::size_t levels);
CropRecord padding_to(std::array<std::size_t, 3> extent, std::array<std::size_t, 3> target);

// Pads each spatial extent up to the next multiple of 2^(levels-1); odd
// padding puts the extra voxel at the high end.
template <typename T>
std::pair<Tensor5<T>, CropRecord> pad_to_grid(const Tensor5<T>& volume, std::size_t levels);

template <typename T>
Tensor5<T> apply_padding(const Tensor5<T>& volume, const CropRecord& rec);
template <typename T>
Tensor5<T> crop(const Tensor5<T>& volume, const CropRecord& rec);

LabelMap apply_padding(const LabelMap& labels, const CropRecord& rec);
LabelMap crop(const LabelMap& labels, const CropRecord& rec);

// Per-voxel argmax over channels of a (1, C, d, h, w) tensor; ties keep the
// lowest class.
template <typename T>
LabelMap argmax_labels(const Tensor5<T>& logits);

}  // namespace revunet
