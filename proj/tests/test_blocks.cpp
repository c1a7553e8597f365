// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <map>

#include "oracles.hpp"
#include "revunet/blocks.hpp"

using namespace revunet;

namespace {

// Enumerates the tensors a freshly built block registers and sums their sizes.
std::size_t enumerate_mbconv(std::size_t c, std::size_t t) {
    ParamStore<double> p;
    build_mbconv_block(p, "b", c, t, NormOptions{}, 1);
    std::size_t n = 0;
    for (std::size_t i = 0; i < p.size(); ++i) n += p[i].numel();
    return n;
}

std::size_t enumerate_standard(std::size_t c) {
    ParamStore<double> p;
    build_standard_block(p, "b", c, NormOptions{}, 1);
    std::size_t n = 0;
    for (std::size_t i = 0; i < p.size(); ++i) n += p[i].numel();
    return n;
}

template <typename T>
void randomize_affine(ParamStore<T>& p, std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto& n = p.name(i);
        if (n.ends_with(".gamma") || n.ends_with(".beta"))
            for (auto& v : p.mutable_value(i).data()) v += static_cast<T>(0.5 * rng.normal());
    }
}

}  // namespace

TEST(ParamCount, MatchesEnumeration) {
    EXPECT_EQ(enumerate_mbconv(30, 2), 5520u);
    EXPECT_EQ(mbconv_param_count(30, 2), 5520u);
    EXPECT_EQ(enumerate_standard(30), 24360u);
    EXPECT_EQ(standard_block_param_count(30), 24360u);
    EXPECT_EQ(enumerate_mbconv(1, 1), 35u);
    EXPECT_EQ(mbconv_param_count(1, 1), 35u);
    for (std::size_t c : {2, 5, 12, 40}) {
        for (std::size_t t : {1, 2, 3, 6}) EXPECT_EQ(mbconv_param_count(c, t), enumerate_mbconv(c, t)) << c << "," << t;
        EXPECT_EQ(standard_block_param_count(c), enumerate_standard(c));
    }
}

TEST(ParamCount, SequenceCountMatchesStore) {
    ParamStore<float> p;
    const auto a = build_mbconv_block(p, "a", 30, 2, NormOptions{}, 1);
    const auto b = build_standard_block(p, "b", 30, NormOptions{}, 2);
    EXPECT_EQ(param_count(a, p), 5520u);
    EXPECT_EQ(param_count(b, p), 24360u);
    EXPECT_EQ(p.scalar_count(), 5520u + 24360u);
}

TEST(ParamCount, MbconvIsSmallerAtTableWidths) {
    for (std::size_t c : {30, 60, 120, 180, 240, 480}) {
        EXPECT_LT(mbconv_param_count(c, 2), standard_block_param_count(c)) << c;
        // Blocks live on the half-width inside a reversible block.
        EXPECT_LT(mbconv_param_count(c / 2, 2), standard_block_param_count(c / 2)) << c;
    }
    // 4C^2 + 64C < 27C^2 + 2C holds from C = 3 on; C = 2 is the one exception.
    for (std::size_t c = 3; c <= 64; ++c) EXPECT_LT(mbconv_param_count(c, 2), standard_block_param_count(c)) << c;
    EXPECT_GT(mbconv_param_count(2, 2), standard_block_param_count(2));
}

TEST(MBConv, StageOrderAndNoTrailingRelu) {
    ParamStore<float> p;
    const auto ops = build_mbconv_block(p, "m", 4, 2, NormOptions{}, 3);
    const std::vector<OpKind> kinds = {OpKind::pointwise, OpKind::group_norm, OpKind::relu,
                                       OpKind::depthwise, OpKind::group_norm, OpKind::relu,
                                       OpKind::pointwise, OpKind::group_norm};
    ASSERT_EQ(ops.size(), kinds.size());
    for (std::size_t i = 0; i < ops.size(); ++i) EXPECT_EQ(ops[i].kind, kinds[i]) << i;
    EXPECT_EQ(p[static_cast<std::size_t>(ops[0].weight)].shape(), (Shape5{8, 4, 1, 1, 1}));
    EXPECT_EQ(p[static_cast<std::size_t>(ops[3].weight)].shape(), (Shape5{8, 1, 3, 3, 3}));
    EXPECT_EQ(p[static_cast<std::size_t>(ops[6].weight)].shape(), (Shape5{4, 8, 1, 1, 1}));
    for (const auto& op : ops) EXPECT_EQ(op.bias, -1);
}

TEST(MBConv, ZeroParametersGiveZeroOutput) {
    ParamStore<double> p;
    const auto ops = build_mbconv_block(p, "m", 6, 2, NormOptions{}, 4);
    for (std::size_t i = 0; i < p.size(); ++i) p.mutable_value(i).fill(0.0);
    const auto y = mbconv_forward(ops, p, oracle::random_tensor<double>({1, 6, 4, 4, 4}, 5));
    EXPECT_EQ(max_abs(y), 0.0);
}

TEST(MBConv, ExpandedWidthVisibleInLedger) {
    ParamStore<float> p;
    const auto ops = build_mbconv_block(p, "m", 4, 2, NormOptions{}, 6);
    const auto x = oracle::random_tensor<float>({1, 4, 4, 4, 4}, 7);
    Tape<float> tape(p.version());
    run_sequence(ops, p, x, &tape, "m");
    std::map<std::string, std::size_t> by_node;
    for (const auto& e : tape.ledger().live_entries()) by_node[e.node] = e.elements;
    EXPECT_EQ(by_node.at("m.expand"), 4u * 64u);
    EXPECT_EQ(by_node.at("m.expand_relu"), 8u * 64u);
    EXPECT_EQ(by_node.at("m.depthwise"), 8u * 64u);
    EXPECT_EQ(by_node.at("m.depthwise_relu"), 8u * 64u);
    EXPECT_EQ(by_node.at("m.project"), 8u * 64u);
    EXPECT_EQ(by_node.at("m.project_gn"), 4u * 64u + 2u);
}

TEST(MBConv, MatchesStraightLineComposition) {
    for (std::size_t c : {4, 10, 20}) {
        ParamStore<float> p;
        NormOptions norm;
        const auto ops = build_mbconv_block(p, "m", c, 2, norm, 8 + c);
        randomize_affine(p, 9);
        const auto x = oracle::random_tensor<float>({1, c, 4, 4, 4}, 10 + c);
        auto v = [&](const char* n) { return p.values(p.index_of(std::string("m.") + n)); };
        auto w = [&](const char* n) { return p[p.index_of(std::string("m.") + n)]; };
        const GroupNormSpec wide = norm.spec_for(2 * c), narrow = norm.spec_for(c);
        Tensor5f h = pointwise_conv3d(x, w("expand.weight"));
        h = relu(group_norm(h, v("expand_gn.gamma"), v("expand_gn.beta"), wide));
        h = depthwise_conv3d(h, w("depthwise.weight"));
        h = relu(group_norm(h, v("depthwise_gn.gamma"), v("depthwise_gn.beta"), wide));
        h = pointwise_conv3d(h, w("project.weight"));
        h = group_norm(h, v("project_gn.gamma"), v("project_gn.beta"), narrow);
        EXPECT_TRUE(bitwise_equal(mbconv_forward(ops, p, x), h)) << c;
    }
}

TEST(MBConv, OutputHasNegativeValues) {
    // A linear bottleneck: the final GN output is not clipped.
    ParamStore<double> p;
    const auto ops = build_mbconv_block(p, "m", 4, 2, NormOptions{}, 11);
    const auto y = mbconv_forward(ops, p, oracle::random_tensor<double>({1, 4, 4, 4, 4}, 12));
    double lo = 0.0;
    for (double v : y.data()) lo = std::min(lo, v);
    EXPECT_LT(lo, 0.0);
}

TEST(MBConv, InvariantToPerGroupShiftAfterGroupNorm) {
    ParamStore<double> p;
    NormOptions norm;
    const auto ops = build_mbconv_block(p, "m", 10, 2, norm, 13);
    randomize_affine(p, 14);
    const auto x = oracle::random_tensor<double>({1, 10, 4, 4, 4}, 15);
    // A constant added per group before GN is removed exactly.
    const auto& we = p[p.index_of("m.expand.weight")];
    Tensor5d h = pointwise_conv3d(x, we);
    const auto spec = norm.spec_for(20);
    Tensor5d shifted = h;
    for (std::size_t c = 0; c < 20; ++c)
        for (auto& v : shifted.plane(0, c)) v += 3.25 * static_cast<double>(1 + c / spec.group_size);
    const auto g = p.values(p.index_of("m.expand_gn.gamma"));
    const auto b = p.values(p.index_of("m.expand_gn.beta"));
    EXPECT_LE(max_abs_diff(group_norm(h, g, b, spec), group_norm(shifted, g, b, spec)), 1e-12);

    // Whole block: with expand rows summing to a per-group constant, shifting
    // the block input by a constant shifts the expanded tensor per group only.
    ParamStore<double> q = p;
    auto& wq = q.mutable_value(q.index_of("m.expand.weight"));
    for (std::size_t o = 0; o < 20; ++o) {
        double s = 0.0;
        for (std::size_t i = 0; i < 10; ++i) s += wq(o, i, 0, 0, 0);
        // Make every row sum to the same per-group value.
        const double target = 0.5 * static_cast<double>(o / spec.group_size);
        wq(o, 0, 0, 0, 0) += target - s;
    }
    Tensor5d xs = x;
    for (auto& v : xs.data()) v += 1.75;
    EXPECT_LE(max_abs_diff(mbconv_forward(ops, q, x), mbconv_forward(ops, q, xs)), 1e-12);
}

TEST(Blocks, ShapePreservingAtTableWidths) {
    for (std::size_t c : {30, 60, 120}) {
        ParamStore<float> p;
        const auto m = build_mbconv_block(p, "m", c / 2, 2, NormOptions{}, 16);
        const auto s = build_standard_block(p, "s", c / 2, NormOptions{}, 17);
        for (std::size_t side : {4, 6}) {
            const auto x = oracle::random_tensor<float>({1, c / 2, side, side, side}, 18);
            EXPECT_EQ(mbconv_forward(m, p, x).shape(), x.shape());
            EXPECT_EQ(run_sequence(s, p, x).shape(), x.shape());
        }
    }
}

TEST(Blocks, ChannelMismatchThrows) {
    ParamStore<float> p;
    const auto m = build_mbconv_block(p, "m", 4, 2, NormOptions{}, 19);
    EXPECT_THROW(mbconv_forward(m, p, Tensor5f(Shape5{1, 5, 4, 4, 4})), ShapeError);
    EXPECT_THROW(build_mbconv_block(p, "z", 0, 2, NormOptions{}, 1), std::invalid_argument);
}

TEST(Blocks, BlockKindNames) {
    EXPECT_EQ(parse_block_kind("mbconv"), BlockKind::mbconv);
    EXPECT_STREQ(block_kind_name(BlockKind::standard), "standard");
    EXPECT_THROW(parse_block_kind("resnet"), std::invalid_argument);
}
