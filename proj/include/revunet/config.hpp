// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Architecture description and the named presets.

#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "revunet/blocks.hpp"

namespace revunet {

class ConfigError : public std::invalid_argument {
 public:
    using std::invalid_argument::invalid_argument;
};

struct UNetConfig {
    std::string name = "custom";
    std::size_t in_ch = 4;
    std::size_t num_classes = 4;
    std::vector<std::size_t> widths;
    std::size_t expand_ratio = 2;  // unused for standard blocks
    BlockKind block_kind = BlockKind::mbconv;
    std::array<std::size_t, 3> image_size{16, 16, 16};  // (d, h, w)
    std::size_t group_size = 10;
    double eps = 1e-5;
    double relu_cap = std::numeric_limits<double>::infinity();

    std::size_t levels() const { return widths.size(); }
    // Spatial divisor imposed by the pooling stages: 2^(levels - 1).
    std::size_t grid() const { return std::size_t{1} << (levels() - 1); }
    NormOptions norm() const { return {group_size, eps, relu_cap}; }

    friend bool operator==(const UNetConfig&, const UNetConfig&) = default;
};

// Throws ConfigError naming the first violated rule. Widths must be even,
// at least 2 and strictly increasing; group norm falls back to one group for
// channel counts the group size does not divide, so widths need not be
// multiples of it. Every group must see at least two values.
void validate(const UNetConfig& cfg);

// Names accepted by preset(): baseline, mbconv-base, mbconv-deeper,
// mbconv-wider, toy, smoke.
std::vector<std::string> preset_names();
UNetConfig preset(const std::string& name);

// Reduced copy for fast verification: at most 16^3 voxels, widths scaled so
// the widest level has 16 channels, level count capped so the deepest level
// keeps at least one voxel.
UNetConfig toy_analog(const UNetConfig& cfg, std::size_t max_width = 16, std::size_t max_extent = 16);

nlohmann::json to_json(const UNetConfig& cfg);
UNetConfig config_from_json(const nlohmann::json& j);
UNetConfig load_config(const std::string& path);

}  // namespace revunet
