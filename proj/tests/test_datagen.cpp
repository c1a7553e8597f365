// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

#include <unistd.h>

#include "oracles.hpp"
#include "revunet/augment.hpp"
#include "revunet/ensemble.hpp"
#include "revunet/rng.hpp"

using namespace revunet;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- phantoms

TEST(Phantom, Deterministic) {
    const auto a = make_phantom(3, {16, 20, 24});
    const auto b = make_phantom(3, {16, 20, 24});
    EXPECT_EQ(a, b);
    EXPECT_FALSE(a == make_phantom(4, {16, 20, 24}));
    EXPECT_EQ(a.volume.shape(), (Shape5{1, 4, 16, 20, 24}));
    EXPECT_EQ(a.labels.dims, (std::array<std::size_t, 3>{16, 20, 24}));
    for (float v : a.volume.data()) {
        EXPECT_GE(v, 0.0f);
        EXPECT_LE(v, 1.0f);
    }
}

TEST(Phantom, NestedLabelsAndClassFrequencies) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto p = make_phantom(s, {16, 16, 16});
        EXPECT_TRUE(labels_nested(p.labels)) << s;
        const auto f = class_fractions(p.labels);
        EXPECT_GE(f[0], 0.6) << s;
        EXPECT_LE(f[0], 0.98) << s;
        for (std::size_t c = 1; c < 4; ++c) EXPECT_GT(f[c], 0.0) << s << " class " << c;
    }
}

TEST(Phantom, NestingCheckDetectsViolations) {
    LabelMap l({3, 3, 3});
    l.at(1, 1, 1) = 2;  // label 2 touching background
    EXPECT_FALSE(labels_nested(l));
    l.at(1, 1, 1) = 4;
    EXPECT_FALSE(labels_nested(l));
}

TEST(Phantom, RejectsTinyVolumes) {
    EXPECT_THROW(make_phantom(1, {15, 16, 16}), std::invalid_argument);
    EXPECT_NO_THROW(make_phantom(1, {16, 16, 16}));
}

TEST(Phantom, CorpusRoundTrip) {
    const fs::path dir = fs::temp_directory_path() / ("revunet_corpus_" + std::to_string(::getpid()));
    std::vector<Phantom> ps = {make_phantom(1, {16, 16, 16}), make_phantom(2, {16, 16, 16})};
    write_corpus(ps, {1, 2}, dir);
    EXPECT_TRUE(fs::exists(dir / "index.json"));
    EXPECT_EQ(read_corpus(dir), ps);
    fs::remove_all(dir);
    EXPECT_ANY_THROW(read_corpus(dir));
}

// ---------------------------------------------------------------- augmentation

TEST(Augment, IdentityIsBitwiseNoOp) {
    const auto p = make_phantom(5, {16, 16, 16});
    EXPECT_EQ(augment(p, AugmentParams::identity(), 123), p);
}

TEST(Augment, DoubleFlipIsIdentity) {
    const auto p = make_phantom(6, {16, 18, 20});
    for (std::size_t axis = 0; axis < 3; ++axis) {
        AugmentParams f;
        f.flip[axis] = true;
        const auto once = augment(p, f, 1);
        EXPECT_FALSE(once == p) << axis;
        EXPECT_EQ(augment(once, f, 1), p) << axis;
        // A single flip is the index mirror.
        const auto& s = p.volume.shape();
        const std::size_t n[3] = {s.d, s.h, s.w};
        for (std::size_t d = 0; d < s.d; d += 5)
            for (std::size_t h = 0; h < s.h; h += 3)
                for (std::size_t w = 0; w < s.w; w += 2) {
                    std::size_t src[3] = {d, h, w};
                    src[axis] = n[axis] - 1 - src[axis];
                    EXPECT_EQ(once.labels.at(d, h, w), p.labels.at(src[0], src[1], src[2]));
                    EXPECT_EQ(once.volume(0, 2, d, h, w), p.volume(0, 2, src[0], src[1], src[2]));
                }
    }
}

TEST(Augment, QuarterTurnEqualsAxisPermutation) {
    const std::size_t S = 16;
    const auto p = make_phantom(7, {S, S, S});
    AugmentParams r;
    r.rotation_deg = 90.0;
    const auto out = augment(p, r, 1);
    for (std::size_t d = 0; d < S; ++d)
        for (std::size_t h = 0; h < S; ++h)
            for (std::size_t w = 0; w < S; ++w)
                ASSERT_EQ(out.labels.at(d, h, w), p.labels.at(d, w, S - 1 - h)) << d << "," << h << "," << w;
    // Four quarter turns return the original labels.
    auto q = p;
    for (int i = 0; i < 4; ++i) q = augment(q, r, 1);
    EXPECT_EQ(q.labels, p.labels);
}

TEST(Augment, LabelsStayValidAndParamsWithinBounds) {
    const AugmentBounds b;
    std::size_t flips = 0;
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const auto a = sample_augment_params(derive_seed(9, "aug", s), b);
        EXPECT_TRUE(a.within(b));
        EXPECT_LE(std::abs(a.rotation_deg), 20.0);
        EXPECT_LE(std::abs(a.scale - 1.0), 0.1);
        EXPECT_LE(std::abs(a.intensity - 1.0), 0.1);
        flips += a.flip[0] + a.flip[1] + a.flip[2];
    }
    EXPECT_GT(flips, 1200u);
    EXPECT_LT(flips, 1800u);
    const auto p = make_phantom(8, {16, 16, 16});
    for (std::uint64_t s = 0; s < 25; ++s) {
        const auto a = sample_augment_params(s, b);
        const auto out = augment(p, a, s);
        for (auto v : out.labels.data) ASSERT_LT(v, 4u);
        for (float v : out.volume.data()) {
            ASSERT_GE(v, 0.0f);
            ASSERT_LE(v, 1.0f);
        }
    }
    AugmentParams bad;
    bad.rotation_deg = 25.0;
    EXPECT_FALSE(bad.within(b));
}

TEST(Augment, ParamsJsonRoundTrip) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto a = sample_augment_params(s);
        EXPECT_EQ(augment_params_from_json(to_json(a)), a);
    }
    EXPECT_EQ(sample_augment_params(3), sample_augment_params(3));
}

TEST(Augment, IntensityScalesAndClamps) {
    const auto p = make_phantom(10, {16, 16, 16});
    AugmentParams a;
    a.intensity = 1.1;
    const auto out = augment(p, a, 1);
    EXPECT_EQ(out.labels, p.labels);
    for (std::size_t i = 0; i < p.volume.numel(); ++i)
        ASSERT_EQ(out.volume[i], std::min(1.0f, p.volume[i] * 1.1f)) << i;
}

// ---------------------------------------------------------------- histograms

TEST(Histogram, ConstantRampAndEmpty) {
    const Tensor5f c(Shape5{1, 2, 2, 2, 2}, 0.5f);
    const auto h = histogram(c, 64);
    EXPECT_EQ(std::accumulate(h.begin(), h.end(), std::uint64_t{0}), 16u);
    EXPECT_EQ(*std::max_element(h.begin(), h.end()), 16u);

    Tensor5f ramp(Shape5{1, 1, 1, 1, 640});
    for (std::size_t i = 0; i < 640; ++i) ramp[i] = (static_cast<float>(i) + 0.5f) / 640.0f;
    const auto hr = histogram(ramp, 64);
    for (auto v : hr) {
        EXPECT_GE(v, 9u);
        EXPECT_LE(v, 11u);
    }
    const auto he = histogram(Tensor5f(Shape5{1, 1, 2, 2, 2}), 8);
    EXPECT_EQ(he, std::vector<std::uint64_t>(8, 0));
}

TEST(Chi2, PremetricProperties) {
    std::vector<std::uint64_t> a = {0, 3, 0, 0}, b = {0, 0, 5, 0};
    EXPECT_EQ(chi2_distance(a, a), 0.0);
    EXPECT_DOUBLE_EQ(chi2_distance(a, b), 1.0);
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        std::vector<std::uint64_t> h(16), g(16);
        for (auto& v : h) v = rng.below(10);
        for (auto& v : g) v = rng.below(10);
        EXPECT_GE(chi2_distance(h, g), 0.0);
        EXPECT_DOUBLE_EQ(chi2_distance(h, g), chi2_distance(g, h));
        // Unit normalisation makes the distance scale-free.
        auto h3 = h;
        for (auto& v : h3) v *= 3;
        EXPECT_NEAR(chi2_distance(h, h3), 0.0, 1e-15);
    }
    EXPECT_THROW(chi2_distance(a, {1, 2}), std::invalid_argument);
}

// ---------------------------------------------------------------- ensemble

namespace {

// Brute force over both objectives.
std::size_t brute_force(const std::vector<std::vector<double>>& dice, const std::vector<double>& dist, bool literal) {
    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t m = 0; m < dice.size(); ++m) {
        double s = 0.0;
        for (std::size_t j = 0; j < dist.size(); ++j)
            s += literal ? dist[j] * dice[m][j] : dice[m][j] / (dist[j] + kSimilarityEpsilon);
        if (m == 0 || (literal ? s < best_score : s > best_score)) {
            best = m;
            best_score = s;
        }
    }
    return best;
}

}  // namespace

TEST(Ensemble, SingleModel) {
    EXPECT_EQ(ensemble_select_distances({{0.3, 0.9}}, {0.1, 0.2}).index, 0u);
    EXPECT_EQ(ensemble_select_distances({{0.3, 0.9}}, {0.1, 0.2}, SelectionReading::similarity).index, 0u);
    EXPECT_THROW(ensemble_select_distances({}, {0.1}), std::invalid_argument);
}

TEST(Ensemble, DominatingModelUnderBothReadings) {
    const std::vector<std::vector<double>> dice = {{0.6, 0.5, 0.7}, {0.8, 0.9, 0.75}};
    const std::vector<double> dist = {0.2, 0.05, 0.4};
    EXPECT_EQ(ensemble_select_distances(dice, dist, SelectionReading::literal).index, 0u);
    EXPECT_EQ(ensemble_select_distances(dice, dist, SelectionReading::similarity).index, 1u);
    const auto r = ensemble_select_distances(dice, dist);
    EXPECT_NEAR(r.scores[0], 0.2 * 0.6 + 0.05 * 0.5 + 0.4 * 0.7, 1e-15);
}

TEST(Ensemble, EqualDistancesReduceToMeanDice) {
    const std::vector<std::vector<double>> dice = {{0.7, 0.9}, {0.2, 0.95}, {0.8, 0.95}};
    const std::vector<double> dist(2, 0.3);
    EXPECT_EQ(ensemble_select_distances(dice, dist, SelectionReading::literal).index, 1u);
    EXPECT_EQ(ensemble_select_distances(dice, dist, SelectionReading::similarity).index, 2u);
}

TEST(Ensemble, ScaleInvarianceAndBruteForce) {
    Rng rng(2);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<std::vector<double>> dice(4, std::vector<double>(6));
        for (auto& row : dice)
            for (auto& v : row) v = rng.uniform();
        std::vector<double> dist(6);
        for (auto& v : dist) v = rng.uniform(0.01, 1.0);
        const auto lit = ensemble_select_distances(dice, dist, SelectionReading::literal).index;
        EXPECT_EQ(lit, brute_force(dice, dist, true));
        EXPECT_EQ(ensemble_select_distances(dice, dist, SelectionReading::similarity).index,
                  brute_force(dice, dist, false));
        auto scaled_dist = dist;
        for (auto& v : scaled_dist) v *= 7.5;
        EXPECT_EQ(ensemble_select_distances(dice, scaled_dist, SelectionReading::literal).index, lit);
    }
}

TEST(Ensemble, FromHistograms) {
    // Two training images: one matching the test volume, one very different.
    Tensor5f test(Shape5{1, 1, 1, 1, 100});
    for (std::size_t i = 0; i < 100; ++i) test[i] = 0.2f + 0.001f * static_cast<float>(i);
    Tensor5f other(Shape5{1, 1, 1, 1, 100}, 0.9f);
    const std::vector<std::vector<std::uint64_t>> hists = {histogram(test, 32), histogram(other, 32)};
    // Model 0 is good on the similar image, model 1 on the dissimilar one.
    const std::vector<std::vector<double>> dice = {{0.9, 0.1}, {0.1, 0.9}};
    const auto lit = ensemble_select(dice, hists, test, SelectionReading::literal, 32);
    EXPECT_EQ(lit.distances[0], 0.0);
    EXPECT_DOUBLE_EQ(lit.distances[1], 1.0);
    EXPECT_EQ(lit.index, 0u);  // 0.9*0 + 0.1*1 < 0.1*0 + 0.9*1
    EXPECT_EQ(ensemble_select(dice, hists, test, SelectionReading::similarity, 32).index, 0u);
    EXPECT_EQ(parse_reading("similarity"), SelectionReading::similarity);
    EXPECT_THROW(parse_reading("best"), std::invalid_argument);
}
