// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Histogram-weighted model selection for an ensemble of trained models.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "revunet/tensor.hpp"

namespace revunet {

// Equal-width bins over [0, 1] counting every voxel value > 0 across all
// channels; values above 1 land in the last bin.
std::vector<std::uint64_t> histogram(const Tensor5f& volume, std::size_t bins = 64);

// 0.5 * sum (h - g)^2 / (h + g) on unit-mass histograms; empty bins in both
// contribute nothing. An all-zero histogram is treated as the zero vector.
double chi2_distance(const std::vector<std::uint64_t>& h, const std::vector<std::uint64_t>& g);

enum class SelectionReading {
    // argmin_m  sum_j chi2(test, train_j) * dice[m][j]
    literal,
    // argmax_m  sum_j dice[m][j] / (chi2(test, train_j) + kSimilarityEpsilon)
    similarity,
};

constexpr double kSimilarityEpsilon = 1e-6;

const char* reading_name(SelectionReading r);
SelectionReading parse_reading(const std::string& s);

struct SelectionResult {
    std::size_t index = 0;
    std::vector<double> scores;     // per model, in the reading's own objective
    std::vector<double> distances;  // per training image
};

// Ties go to the lowest model index.
SelectionResult ensemble_select_distances(const std::vector<std::vector<double>>& dice,
                                          const std::vector<double>& distances,
                                          SelectionReading reading = SelectionReading::literal);

SelectionResult ensemble_select(const std::vector<std::vector<double>>& dice,
                                const std::vector<std::vector<std::uint64_t>>& train_histograms,
                                const Tensor5f& test_volume,
                                SelectionReading reading = SelectionReading::literal, std::size_t bins = 64);

}  // namespace revunet
