// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Batch-size-1 training loop: augment, forward, soft Dice, backward, Adam.
// One epoch visits every training sample once in a seeded order.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <json.hpp>

#include "revunet/augment.hpp"
#include "revunet/loss.hpp"
#include "revunet/model.hpp"
#include "revunet/optimizer.hpp"

namespace revunet {

struct TrainOptions {
    std::size_t epochs = 0;
    LrSchedule schedule{};
    Strategy strategy = Strategy::reversible;
    bool augment = true;
    AugmentBounds bounds{};
    double smoothing = 1.0;
    std::uint64_t seed = 0;
    std::size_t max_steps = 0;  // 0 means no cap
    std::ostream* log = nullptr;  // one JSON line per epoch when set
};

struct EpochMetrics {
    std::size_t epoch = 0;
    std::size_t step = 0;  // optimizer steps taken so far
    double loss = 0.0;     // mean training loss over the epoch
    std::vector<double> holdout_dice;  // per class, averaged over holdout images
    double holdout_mean_dice = 0.0;
    double lr = 0.0;
    std::size_t peak_ledger_bytes = 0;
};

nlohmann::json to_json(const EpochMetrics& m);

struct Evaluation {
    std::vector<double> per_class;  // averaged over images
    double mean = 0.0;              // mean over classes of per_class
    std::vector<double> per_image_mean;
};

template <typename T>
LabelMap segment(const Model<T>& model, const Tensor5f& volume);

template <typename T>
Evaluation evaluate(const Model<T>& model, const std::vector<Phantom>& data);

template <typename T>
struct TrainResult {
    Model<T> model;
    std::vector<EpochMetrics> log;
    Evaluation initial;
};

template <typename T>
TrainResult<T> train(const UNetConfig& cfg, const std::vector<Phantom>& train_set,
                     const std::vector<Phantom>& holdout, const TrainOptions& opt);

// Proportional train/holdout split (330/40 of 370 by default).
std::pair<std::size_t, std::size_t> holdout_split(std::size_t total, std::size_t train_part = 330,
                                                  std::size_t holdout_part = 40);

}  // namespace revunet
