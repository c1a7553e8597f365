// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "ledger_grid.hpp"

using namespace revunet;

TEST(Estimate, MatchesRuntimeLedgerOnGrid) {
    const auto grid = ledger_grid::configs();
    ASSERT_GE(grid.size(), 20u);
    for (const auto& cfg : grid) {
        for (Strategy s : {Strategy::store_all, Strategy::reversible}) {
            const auto c = ledger_grid::compare(cfg, s);
            EXPECT_TRUE(c.equal) << to_json(cfg).dump() << " " << strategy_name(s) << ": " << c.detail;
            EXPECT_GT(c.entries, 0u);
        }
    }
}

TEST(Estimate, ToyConfigEntryByEntry) {
    const auto cfg = preset("toy");
    const auto est = estimate(cfg, Strategy::store_all);
    // enc0.raise retains the 4-channel input.
    ASSERT_FALSE(est.entries.empty());
    EXPECT_EQ(est.entries[0].node, "enc0.raise");
    EXPECT_EQ(est.entries[0].elements, 4u * 512u);
    const auto c = ledger_grid::compare(cfg, Strategy::store_all);
    EXPECT_TRUE(c.equal) << c.detail;
    const auto rev = estimate(cfg, Strategy::reversible);
    for (const auto& e : rev.entries) EXPECT_EQ(e.node.find(".rev."), std::string::npos) << e.node;
}

TEST(Estimate, ReversibleIsSmaller) {
    for (const auto& n : preset_names()) {
        const auto a = estimate(preset(n), Strategy::store_all);
        const auto r = estimate(preset(n), Strategy::reversible);
        EXPECT_LT(r.peak_elements, a.peak_elements) << n;
        EXPECT_LT(r.retained_elements, a.retained_elements) << n;
        EXPECT_EQ(r.param_count, a.param_count);
        EXPECT_EQ(a.param_count, model_param_count(preset(n)));
    }
}

TEST(Estimate, ParamCountMatchesBuiltModel) {
    for (const auto& n : {"toy", "smoke", "mbconv-base", "baseline"}) {
        EXPECT_EQ(model_param_count(preset(n)), Model<float>::build(preset(n), 1).params().scalar_count()) << n;
    }
}

TEST(Estimate, MbconvBaseFitsFourteenGigabytes) {
    const auto e = estimate(preset("mbconv-base"), Strategy::reversible);
    EXPECT_EQ(e.config.image_size, (std::array<std::size_t, 3>{160, 256, 256}));
    EXPECT_LE(e.peak_bytes(), parse_budget("14GB"));
    EXPECT_GT(estimate(preset("mbconv-base"), Strategy::store_all).peak_bytes(), e.peak_bytes());
    EXPECT_EQ(estimate(preset("mbconv-base"), Strategy::reversible, Precision::f64).peak_bytes(), 2 * e.peak_bytes());
}

TEST(Estimate, JsonReport) {
    const auto j = to_json(estimate(preset("toy"), Strategy::reversible));
    EXPECT_EQ(j.at("strategy"), "reversible");
    EXPECT_EQ(j.at("nodes").size(), estimate(preset("toy"), Strategy::reversible).entries.size());
}

TEST(Budget, ParseBudget) {
    EXPECT_EQ(parse_budget("123"), 123u);
    EXPECT_EQ(parse_budget("64k"), 64000u);
    EXPECT_EQ(parse_budget("512MB"), 512000000u);
    EXPECT_EQ(parse_budget("1.5GB"), 1500000000u);
    EXPECT_EQ(parse_budget("14GiB"), 14ull << 30);
    EXPECT_EQ(parse_budget("2 MiB"), 2u << 20);
    for (const char* bad : {"", "GB", "-1GB", "12XB", "1.2.3", "abc"}) EXPECT_THROW(parse_budget(bad), std::invalid_argument) << bad;
}

TEST(Budget, BaseScaleAtExactBudgetAndMonotone) {
    const auto base = toy_analog(preset("mbconv-base"), 16, 16);
    for (Axis axis : {Axis::volume, Axis::channels, Axis::depth}) {
        for (Strategy s : {Strategy::store_all, Strategy::reversible}) {
            const std::size_t b0 = estimate(base, s).peak_bytes();
            const auto at = budget_search(base, b0, axis, s);
            EXPECT_DOUBLE_EQ(at.scale, 1.0) << axis_name(axis) << " " << strategy_name(s);
            EXPECT_LE(at.peak_bytes, b0);
            double prev = at.scale;
            for (std::size_t mult = 2; mult <= 16; mult *= 2) {
                const auto r = budget_search(base, b0 * mult, axis, s);
                EXPECT_GE(r.scale, prev) << axis_name(axis);
                EXPECT_LE(r.peak_bytes, b0 * mult);
                EXPECT_EQ(estimate(r.config, s).peak_bytes(), r.peak_bytes);
                prev = r.scale;
            }
            EXPECT_THROW(budget_search(base, b0 - 1, axis, s), ConfigError);
        }
    }
}

TEST(Budget, ReversibleAffordsMore) {
    const auto base = toy_analog(preset("mbconv-base"), 16, 16);
    const std::size_t b = estimate(base, Strategy::store_all).peak_bytes();
    for (Axis axis : {Axis::volume, Axis::channels}) {
        EXPECT_GT(budget_search(base, b, axis, Strategy::reversible).scale,
                  budget_search(base, b, axis, Strategy::store_all).scale)
            << axis_name(axis);
    }
}

TEST(Budget, ScalingHelpers) {
    const auto base = preset("mbconv-base");
    EXPECT_EQ(scale_channels(base, 2.0).widths, (std::vector<std::size_t>{60, 120, 240, 360, 480}));
    EXPECT_EQ(scale_depth(base, 6).widths.back(), 480u);
    EXPECT_EQ(scale_depth(base, 6).levels(), 6u);
    const auto rod = volume_rod(base, 3);
    EXPECT_EQ(rod.image_size, (std::array<std::size_t, 3>{16, 16, 48}));
    EXPECT_EQ(parse_axis("channels"), Axis::channels);
    EXPECT_THROW(parse_axis("time"), std::invalid_argument);
}

TEST(Claims, ReportShape) {
    const auto j = claims_report(preset("mbconv-base"));
    for (const char* k : {"volume", "channels", "depth"}) EXPECT_TRUE(j.at("axes").contains(k)) << k;
    EXPECT_GT(j.at("activation_ratio").get<double>(), 1.0);
    const auto& fits = j.at("fits_14GB");
    EXPECT_TRUE(fits.at("reversible").at("activations_only").get<bool>());
    EXPECT_TRUE(fits.at("reversible").at("activations_plus_params").get<bool>());
    EXPECT_FALSE(fits.at("store-all").at("activations_only").get<bool>());
}
