// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "oracles.hpp"
#include "revunet/tensor_io.hpp"

using namespace revunet;
namespace fs = std::filesystem;

TEST(Tensor, ShapeAndIndexing) {
    Tensor5f t(Shape5{2, 3, 4, 5, 6});
    EXPECT_EQ(t.numel(), 720u);
    EXPECT_EQ(t.shape().spatial(), 120u);
    t(1, 2, 3, 4, 5) = 9.0f;
    EXPECT_EQ(t[t.numel() - 1], 9.0f);
    EXPECT_EQ(t.offset(0, 1, 0, 0, 0), 120u);
    EXPECT_THROW(validate_shape(Shape5{1, 0, 2, 2, 2}), ShapeError);
}

TEST(Tensor, SplitConcatRoundTrip) {
    const auto t = oracle::random_tensor<double>({1, 6, 2, 3, 2}, 1);
    const auto [a, b] = channel_split(t);
    EXPECT_EQ(a.shape().c, 3u);
    EXPECT_EQ(a(0, 2, 1, 1, 1), t(0, 2, 1, 1, 1));
    EXPECT_EQ(b(0, 0, 1, 2, 0), t(0, 3, 1, 2, 0));
    EXPECT_TRUE(bitwise_equal(channel_concat(a, b), t));
    EXPECT_THROW(channel_split(Tensor5d(Shape5{1, 3, 1, 1, 1})), ShapeError);
    EXPECT_THROW(channel_concat(a, Tensor5d(Shape5{1, 3, 2, 3, 3})), ShapeError);
}

TEST(Tensor, ElementwiseHelpers) {
    Tensor5d a(Shape5{1, 1, 1, 1, 3}, std::vector<double>{1, 2, 3});
    Tensor5d b(Shape5{1, 1, 1, 1, 3}, std::vector<double>{0.5, -1, 4});
    EXPECT_EQ(ew_add(a, b)[2], 7.0);
    EXPECT_EQ(ew_sub(a, b)[1], 3.0);
    EXPECT_EQ(scaled(a, 2.0)[0], 2.0);
    EXPECT_EQ(max_abs_diff(a, b), 3.0);
    EXPECT_EQ(max_abs(b), 4.0);
    add_inplace(a, b);
    EXPECT_EQ(a[0], 1.5);
    EXPECT_THROW(ew_add(a, Tensor5d(Shape5{1, 1, 1, 1, 2})), ShapeError);
}

class TensorIo : public ::testing::Test {
 protected:
    fs::path dir = fs::temp_directory_path() / ("revunet_io_" + std::to_string(::getpid()));
    void SetUp() override { fs::create_directories(dir); }
    void TearDown() override { fs::remove_all(dir); }
};

TEST_F(TensorIo, RoundTripBothPrecisions) {
    const auto d = oracle::random_tensor<double>({1, 2, 3, 4, 5}, 2);
    const auto f = tensor_cast<float>(d);
    tensor_write(d, dir / "d.rvt");
    tensor_write(f, dir / "f.rvt");
    EXPECT_TRUE(bitwise_equal(tensor_read<double>(dir / "d.rvt"), d));
    EXPECT_TRUE(bitwise_equal(tensor_read<float>(dir / "f.rvt"), f));
    EXPECT_TRUE(std::holds_alternative<Tensor5f>(tensor_read_any(dir / "f.rvt")));
    // Cross-precision read converts.
    EXPECT_TRUE(bitwise_equal(tensor_read<float>(dir / "d.rvt"), f));
}

TEST_F(TensorIo, HeaderLayout) {
    Tensor5f t(Shape5{1, 1, 1, 2, 3}, 1.5f);
    std::ostringstream os;
    write_tensor(os, t);
    const std::string s = os.str();
    ASSERT_EQ(s.size(), 4u + 2u + 5u * 8u + 6u * 4u);
    EXPECT_EQ(s.substr(0, 4), "RVT1");
    EXPECT_EQ(s[4], 0);
    EXPECT_EQ(s[5], 5);
    std::uint64_t w = 0;
    std::memcpy(&w, s.data() + 6 + 4 * 8, 8);
    EXPECT_EQ(w, 3u);
    float v = 0;
    std::memcpy(&v, s.data() + 46, 4);
    EXPECT_EQ(v, 1.5f);
}

TEST_F(TensorIo, RejectsCorruptFiles) {
    {
        std::ofstream(dir / "bad.rvt") << "XXXX";
    }
    EXPECT_THROW(tensor_read<float>(dir / "bad.rvt"), FormatError);
    Tensor5f t(Shape5{1, 1, 2, 2, 2}, 1.0f);
    std::ostringstream os;
    write_tensor(os, t);
    const std::string s = os.str();
    {
        std::ofstream f(dir / "short.rvt", std::ios::binary);
        f.write(s.data(), static_cast<std::streamsize>(s.size() - 3));
    }
    EXPECT_THROW(tensor_read<float>(dir / "short.rvt"), FormatError);
    EXPECT_THROW(tensor_read<float>(dir / "missing.rvt"), std::runtime_error);
}
