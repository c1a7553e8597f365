// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include "revunet/ensemble.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace revunet {

std::vector<std::uint64_t> histogram(const Tensor5f& volume, std::size_t bins) {
    if (bins < 2) throw std::invalid_argument("histogram needs at least 2 bins");
    std::vector<std::uint64_t> counts(bins, 0);
    for (float v : volume.data()) {
        if (!(v > 0.0f)) continue;
        const double scaled = static_cast<double>(v) * static_cast<double>(bins);
        const std::size_t b = scaled >= static_cast<double>(bins) ? bins - 1 : static_cast<std::size_t>(scaled);
        ++counts[b];
    }
    return counts;
}

double chi2_distance(const std::vector<std::uint64_t>& h, const std::vector<std::uint64_t>& g) {
    if (h.size() != g.size()) {
        throw std::invalid_argument("histogram bin counts differ: " + std::to_string(h.size()) + " vs " +
                                    std::to_string(g.size()));
    }
    const double sh = static_cast<double>(std::accumulate(h.begin(), h.end(), std::uint64_t{0}));
    const double sg = static_cast<double>(std::accumulate(g.begin(), g.end(), std::uint64_t{0}));
    double acc = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double a = sh > 0 ? static_cast<double>(h[i]) / sh : 0.0;
        const double b = sg > 0 ? static_cast<double>(g[i]) / sg : 0.0;
        if (a + b > 0.0) acc += (a - b) * (a - b) / (a + b);
    }
    return 0.5 * acc;
}

const char* reading_name(SelectionReading r) { return r == SelectionReading::literal ? "literal" : "similarity"; }

SelectionReading parse_reading(const std::string& s) {
    if (s == "literal") return SelectionReading::literal;
    if (s == "similarity") return SelectionReading::similarity;
    throw std::invalid_argument("unknown selection reading '" + s + "' (expected literal or similarity)");
}

SelectionResult ensemble_select_distances(const std::vector<std::vector<double>>& dice,
                                          const std::vector<double>& distances, SelectionReading reading) {
    if (dice.empty()) throw std::invalid_argument("ensemble_select: empty model set");
    SelectionResult r;
    r.distances = distances;
    for (std::size_t m = 0; m < dice.size(); ++m) {
        if (dice[m].size() != distances.size()) {
            throw std::invalid_argument("model " + std::to_string(m) + " has " + std::to_string(dice[m].size()) +
                                        " Dice values for " + std::to_string(distances.size()) + " training images");
        }
        double s = 0.0;
        for (std::size_t j = 0; j < distances.size(); ++j) {
            if (!std::isfinite(dice[m][j])) throw std::invalid_argument("non-finite Dice value");
            s += reading == SelectionReading::literal ? distances[j] * dice[m][j]
                                                      : dice[m][j] / (distances[j] + kSimilarityEpsilon);
        }
        r.scores.push_back(s);
    }
    for (std::size_t m = 1; m < r.scores.size(); ++m) {
        const bool better = reading == SelectionReading::literal ? r.scores[m] < r.scores[r.index]
                                                                 : r.scores[m] > r.scores[r.index];
        if (better) r.index = m;
    }
    return r;
}

SelectionResult ensemble_select(const std::vector<std::vector<double>>& dice,
                                const std::vector<std::vector<std::uint64_t>>& train_histograms,
                                const Tensor5f& test_volume, SelectionReading reading, std::size_t bins) {
    const auto test = histogram(test_volume, bins);
    std::vector<double> dist;
    dist.reserve(train_histograms.size());
    for (const auto& h : train_histograms) dist.push_back(chi2_distance(test, h));
    return ensemble_select_distances(dice, dist, reading);
}

}  // namespace revunet
