// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "revunet/blocks.hpp"
#include "revunet/rev_block.hpp"

using namespace revunet;

namespace {

OpSequence scale_only(double factor) {
    OpSpec op;
    op.kind = OpKind::scale;
    op.name = "scale";
    op.factor = factor;
    return {op};
}

template <typename T>
struct MbRev {
    ParamStore<T> p;
    RevBlock<T> block;
};

// A RevBlock with MBConv F and G on half = channels / 2 and perturbed affine
// parameters so every gradient path is non-trivial.
template <typename T>
MbRev<T> make_mbconv_rev(std::size_t channels, std::uint64_t seed, std::size_t t = 2) {
    MbRev<T> r;
    NormOptions norm;
    auto f = build_mbconv_block(r.p, "blk.F", channels / 2, t, norm, seed);
    auto g = build_mbconv_block(r.p, "blk.G", channels / 2, t, norm, seed + 1);
    Rng rng(seed + 2);
    for (std::size_t i = 0; i < r.p.size(); ++i) {
        const auto& n = r.p.name(i);
        if (n.ends_with(".gamma") || n.ends_with(".beta")) {
            for (auto& v : r.p.mutable_value(i).data()) v += static_cast<T>(0.3 * rng.normal());
        }
    }
    r.block = RevBlock<T>("blk", std::move(f), std::move(g));
    return r;
}

}  // namespace

TEST(RevBlock, ZeroCouplingIsIdentity) {
    ParamStore<double> p;
    RevBlock<double> b("zero", scale_only(0.0), scale_only(0.0));
    const auto x = oracle::random_tensor<double>({1, 4, 2, 2, 2}, 1);
    EXPECT_TRUE(bitwise_equal(b.forward(p, x), x));
    EXPECT_TRUE(bitwise_equal(b.inverse(p, x), x));

    Tape<double> tape(p.version());
    b.forward(p, x, &tape, Strategy::reversible);
    Gradients<double> g = p.zeros_like();
    const auto dy = oracle::random_tensor<double>(x.shape(), 2);
    EXPECT_TRUE(bitwise_equal(b.backward(p, tape, dy, g), dy));
    EXPECT_EQ(g.size(), 0u);
    EXPECT_TRUE(tape.empty());
}

TEST(RevBlock, IdentityCouplingHandEvaluation) {
    ParamStore<double> p;
    RevBlock<double> b("id", scale_only(1.0), scale_only(1.0));
    Tensor5d x(Shape5{1, 2, 1, 1, 1}, std::vector<double>{1.0, 2.0});
    const auto y = b.forward(p, x);
    EXPECT_EQ(y[0], 3.0);
    EXPECT_EQ(y[1], 5.0);
    const auto back = b.inverse(p, y);
    EXPECT_EQ(back[0], 1.0);
    EXPECT_EQ(back[1], 2.0);
}

TEST(RevBlock, RejectsOddChannelsAndShapeChangingSubBlocks) {
    ParamStore<double> p;
    RevBlock<double> b("id", scale_only(1.0), scale_only(1.0));
    EXPECT_THROW(b.forward(p, Tensor5d(Shape5{1, 3, 2, 2, 2})), ShapeError);
    EXPECT_THROW(b.inverse(p, Tensor5d(Shape5{1, 3, 2, 2, 2})), ShapeError);
    OpSpec pool;
    pool.kind = OpKind::maxpool;
    pool.name = "pool";
    RevBlock<double> bad("bad", {pool}, scale_only(1.0));
    EXPECT_THROW(bad.forward(p, Tensor5d(Shape5{1, 2, 2, 2, 2})), ShapeError);
}

TEST(RevBlock, RoundTripDouble) {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        auto r = make_mbconv_rev<double>(8, 100 + s);
        const auto x = oracle::random_tensor<double>({1, 8, 4, 4, 4}, 200 + s);
        worst = std::max(worst, max_abs_diff(r.block.inverse(r.p, r.block.forward(r.p, x)), x));
    }
    EXPECT_LE(worst, 1e-10);
}

TEST(RevBlock, RoundTripSingle) {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        auto r = make_mbconv_rev<float>(8, 300 + s);
        const auto x = oracle::random_tensor<float>({1, 8, 4, 4, 4}, 400 + s);
        worst = std::max(worst, max_abs_diff(r.block.inverse(r.p, r.block.forward(r.p, x)), x));
    }
    EXPECT_LE(worst, 1e-4);
}

TEST(RevBlock, ReversibleModeRetainsOnlyTheOutput) {
    auto r = make_mbconv_rev<float>(8, 7);
    const auto x = oracle::random_tensor<float>({1, 8, 4, 4, 4}, 8);

    Tape<float> rev_tape(r.p.version());
    r.block.forward(r.p, x, &rev_tape, Strategy::reversible);
    const auto rev_entries = rev_tape.ledger().live_entries();
    ASSERT_EQ(rev_entries.size(), 1u);
    EXPECT_EQ(rev_entries[0].node, "blk");
    EXPECT_EQ(rev_entries[0].tag, StorageTag::reversible);
    EXPECT_EQ(rev_entries[0].elements, x.numel());

    Tape<float> all_tape(r.p.version());
    r.block.forward(r.p, x, &all_tape, Strategy::store_all);
    const auto all_entries = all_tape.ledger().live_entries();
    std::set<std::string> nodes;
    for (const auto& e : all_entries) nodes.insert(e.node);
    for (const char* half : {"blk.F", "blk.G"}) {
        for (const char* op : {"expand", "expand_gn", "expand_relu", "depthwise", "depthwise_gn", "depthwise_relu",
                               "project", "project_gn"}) {
            EXPECT_TRUE(nodes.count(std::string(half) + "." + op)) << half << "." << op;
        }
    }
    // Input of F's ops are the 4-channel half; the expanded tensors have 8 channels.
    std::size_t expected = 0;
    const std::size_t v = 64, half = 4, wide = 8;
    for (int side = 0; side < 2; ++side) {
        expected += half * v;                 // expand (input)
        expected += wide * v + 2;             // expand_gn (input + mean/rstd of one group)
        expected += wide * v;                 // expand_relu (output)
        expected += wide * v;                 // depthwise (input)
        expected += wide * v + 2;             // depthwise_gn
        expected += wide * v;                 // depthwise_relu
        expected += wide * v;                 // project (input)
        expected += half * v + 2;             // project_gn
    }
    EXPECT_EQ(all_tape.ledger().retained_elements(), expected);
    EXPECT_LT(rev_tape.ledger().retained_elements(), all_tape.ledger().retained_elements());
}

TEST(RevBlock, ReversibleGradientsEqualStoreAll) {
    auto r = make_mbconv_rev<double>(4, 11);
    const auto x = oracle::random_tensor<double>({1, 4, 2, 2, 2}, 12);
    const auto dy = oracle::random_tensor<double>(x.shape(), 13);

    auto grads_for = [&](Strategy s, Tensor5d& dx) {
        Tape<double> tape(r.p.version());
        r.block.forward(r.p, x, &tape, s);
        Gradients<double> g = r.p.zeros_like();
        dx = r.block.backward(r.p, tape, dy, g);
        EXPECT_TRUE(tape.empty());
        return g;
    };
    Tensor5d dx_a, dx_r;
    const auto ga = grads_for(Strategy::store_all, dx_a);
    const auto gr = grads_for(Strategy::reversible, dx_r);
    double worst = 0.0;
    for (std::size_t i = 0; i < ga.size(); ++i)
        for (std::size_t j = 0; j < ga[i].numel(); ++j) worst = std::max(worst, oracle::rel_err(ga[i][j], gr[i][j], 1e-12));
    for (std::size_t j = 0; j < dx_a.numel(); ++j) worst = std::max(worst, oracle::rel_err(dx_a[j], dx_r[j], 1e-12));
    EXPECT_LE(worst, 1e-10);
}

TEST(RevBlock, GradientsMatchFiniteDifferencesOnEveryParameter) {
    auto r = make_mbconv_rev<double>(4, 21);
    auto x = oracle::random_tensor<double>({1, 4, 2, 2, 2}, 22);
    const auto proj = oracle::random_tensor<double>(x.shape(), 23);
    Tape<double> tape(r.p.version());
    r.block.forward(r.p, x, &tape, Strategy::reversible);
    Gradients<double> g = r.p.zeros_like();
    const auto dx = r.block.backward(r.p, tape, proj, g);

    auto loss = [&] { return oracle::dot(r.block.forward(r.p, x), proj); };
    // Relative error against a floor scaled to the largest gradient: central
    // differences carry an absolute round-off of roughly eps * |L| / h.
    double gmax = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) gmax = std::max(gmax, max_abs(g[i]));
    const double floor = 1e-3 * gmax;
    double worst = 0.0;
    std::size_t probes = 0;
    for (std::size_t i = 0; i < r.p.size(); ++i) {
        for (std::size_t j = 0; j < r.p[i].numel(); ++j) {
            double* slot = &r.p.mutable_value(i)[j];
            worst = std::max(worst, oracle::rel_err(g[i][j], oracle::central_difference(slot, 1e-5, loss), floor));
            ++probes;
        }
    }
    for (std::size_t j = 0; j < x.numel(); ++j) {
        worst = std::max(worst, oracle::rel_err(dx[j], oracle::central_difference(&x[j], 1e-5, loss), floor));
    }
    EXPECT_EQ(probes, r.p.scalar_count());
    EXPECT_LE(worst, 1e-6);
}

TEST(RevBlock, ParameterDriftIsAHardError) {
    auto r = make_mbconv_rev<double>(4, 31);
    const auto x = oracle::random_tensor<double>({1, 4, 2, 2, 2}, 32);
    for (Strategy s : {Strategy::reversible, Strategy::store_all}) {
        Tape<double> tape(r.p.version());
        r.block.forward(r.p, x, &tape, s);
        r.p.mutable_value(0)[0] += 1.0;
        Gradients<double> g = r.p.zeros_like();
        EXPECT_THROW(r.block.backward(r.p, tape, x, g), ParameterDriftError);
    }
}

TEST(RevBlock, RepeatedRunsAreBitwiseIdentical) {
    auto r = make_mbconv_rev<float>(8, 41);
    const auto x = oracle::random_tensor<float>({1, 8, 4, 4, 4}, 42);
    const auto dy = oracle::random_tensor<float>(x.shape(), 43);
    auto run = [&] {
        Tape<float> tape(r.p.version());
        r.block.forward(r.p, x, &tape, Strategy::reversible);
        Gradients<float> g = r.p.zeros_like();
        r.block.backward(r.p, tape, dy, g);
        return g;
    };
    const auto a = run(), b = run();
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(bitwise_equal(a[i], b[i])) << a.name(i);
}

TEST(RevBlock, BackwardFromOutputMatchesTapeBackward) {
    auto r = make_mbconv_rev<double>(8, 51);
    const auto x = oracle::random_tensor<double>({1, 8, 4, 4, 4}, 52);
    const auto dy = oracle::random_tensor<double>(x.shape(), 53);
    Tape<double> tape(r.p.version());
    const auto y = r.block.forward(r.p, x, &tape, Strategy::reversible);
    Gradients<double> g1 = r.p.zeros_like(), g2 = r.p.zeros_like();
    const auto dx1 = r.block.backward(r.p, tape, dy, g1);
    const auto dx2 = r.block.backward_from_output(r.p, y, dy, g2);
    EXPECT_TRUE(bitwise_equal(dx1, dx2));
    for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_TRUE(bitwise_equal(g1[i], g2[i]));
}

// ---------------------------------------------------------------- ledger

TEST(Ledger, PointwiseStoreAllRetainsItsInput) {
    ParamStore<float> p;
    OpSpec op;
    op.kind = OpKind::pointwise;
    op.name = "pw";
    op.weight = static_cast<std::ptrdiff_t>(add_he_normal(p, "pw.weight", Shape5{3, 2, 1, 1, 1}, 2, 1));
    const auto x = oracle::random_tensor<float>({1, 2, 3, 3, 3}, 2);
    Tape<float> tape(p.version());
    run_op(op, p, x, &tape);
    EXPECT_EQ(ledger_peak(tape), x.numel());
    const auto rep = ledger_report(tape);
    ASSERT_EQ(rep.entries.size(), 1u);
    EXPECT_EQ(rep.entries[0].elements, x.numel());
    EXPECT_EQ(rep.entries[0].op, "pointwise_conv3d");
    EXPECT_EQ(rep.retained_elements, x.numel());
}

TEST(Ledger, PeakOfChainIsSubadditive) {
    auto a = make_mbconv_rev<float>(8, 61);
    auto b = make_mbconv_rev<float>(8, 62);
    const auto x = oracle::random_tensor<float>({1, 8, 4, 4, 4}, 63);
    auto peak_of = [](const MbRev<float>& r, const Tensor5f& in, Tensor5f* out) {
        Tape<float> t(r.p.version());
        auto y = r.block.forward(r.p, in, &t, Strategy::store_all);
        if (out) *out = y;
        return ledger_peak(t);
    };
    Tensor5f mid;
    const std::size_t pa = peak_of(a, x, &mid), pb = peak_of(b, mid, nullptr);
    Tape<float> chain(a.p.version());
    const auto y1 = a.block.forward(a.p, x, &chain, Strategy::store_all);
    // The second block has its own parameter store; its version check is not
    // exercised here, only the shared ledger.
    Tape<float> second(b.p.version(), chain.shared_ledger());
    b.block.forward(b.p, y1, &second, Strategy::store_all);
    EXPECT_LE(chain.ledger().peak_elements(), pa + pb);
    EXPECT_EQ(chain.ledger().peak_elements(), pa + pb);  // nothing is released during a forward
}

TEST(Ledger, ReportIsDeterministicJson) {
    auto r = make_mbconv_rev<float>(8, 71);
    const auto x = oracle::random_tensor<float>({1, 8, 4, 4, 4}, 72);
    auto report = [&] {
        Tape<float> t(r.p.version());
        r.block.forward(r.p, x, &t, Strategy::store_all);
        return to_json(ledger_report(t)).dump();
    };
    const auto a = report();
    EXPECT_EQ(a, report());
    const auto j = nlohmann::json::parse(a);
    EXPECT_EQ(j["schema_version"], 1);
    const auto& n0 = j["nodes"][0];
    for (const char* key : {"node", "op", "elements", "bytes", "strategy"}) EXPECT_TRUE(n0.contains(key)) << key;
    EXPECT_EQ(n0["bytes"].get<std::size_t>(), 4 * n0["elements"].get<std::size_t>());
}

TEST(Ledger, BackwardReleasesEverything) {
    auto r = make_mbconv_rev<float>(8, 81);
    const auto x = oracle::random_tensor<float>({1, 8, 4, 4, 4}, 82);
    for (Strategy s : {Strategy::store_all, Strategy::reversible}) {
        Tape<float> t(r.p.version());
        r.block.forward(r.p, x, &t, s);
        Gradients<float> g = r.p.zeros_like();
        r.block.backward(r.p, t, x, g);
        EXPECT_EQ(t.ledger().retained_elements(), 0u);
        EXPECT_GE(t.ledger().peak_elements(), x.numel());
    }
}
