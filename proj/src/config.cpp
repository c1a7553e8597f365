// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include "revunet/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace revunet {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

void check_norm(const UNetConfig& cfg, std::size_t channels, std::size_t spatial, const std::string& where) {
    const std::size_t gs = default_group_size(channels, cfg.group_size);
    require(gs * spatial >= 2, where + ": group norm over " + std::to_string(channels) + " channels and " +
                                   std::to_string(spatial) + " voxels has fewer than 2 values per group");
}

}  // namespace

void validate(const UNetConfig& cfg) {
    require(cfg.in_ch >= 1, "in_ch must be >= 1");
    require(cfg.num_classes >= 2, "num_classes must be >= 2");
    require(!cfg.widths.empty(), "widths must not be empty");
    require(cfg.widths.size() <= 16, "at most 16 levels are supported");
    require(cfg.group_size >= 1, "group_size must be >= 1");
    require(cfg.eps > 0.0, "eps must be positive");
    require(cfg.relu_cap > 0.0, "relu_cap must be positive");
    if (cfg.block_kind == BlockKind::mbconv) require(cfg.expand_ratio >= 1, "expand_ratio must be >= 1");
    for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
        const std::size_t w = cfg.widths[i];
        require(w >= 2 && w % 2 == 0, "width " + std::to_string(w) + " at level " + std::to_string(i) +
                                          " must be even and >= 2 (reversible blocks split channels in half)");
        if (i > 0) require(w > cfg.widths[i - 1], "widths must be strictly increasing");
    }
    const std::size_t g = cfg.grid();
    for (std::size_t a = 0; a < 3; ++a) {
        const std::size_t e = cfg.image_size[a];
        require(e >= g && e % g == 0, "image extent " + std::to_string(e) + " must be a positive multiple of " +
                                          std::to_string(g) + " for " + std::to_string(cfg.levels()) + " levels");
    }
    for (std::size_t i = 0; i < cfg.levels(); ++i) {
        const std::size_t s = std::size_t{1} << i;
        const std::size_t spatial = (cfg.image_size[0] / s) * (cfg.image_size[1] / s) * (cfg.image_size[2] / s);
        const std::size_t half = cfg.widths[i] / 2;
        const std::string where = "level " + std::to_string(i);
        if (cfg.block_kind == BlockKind::mbconv) {
            check_norm(cfg, half * cfg.expand_ratio, spatial, where);
        }
        check_norm(cfg, half, spatial, where);
        if (i + 1 < cfg.levels()) check_norm(cfg, cfg.widths[i], spatial, where + " decoder");
    }
}

std::vector<std::string> preset_names() {
    return {"baseline", "mbconv-base", "mbconv-deeper", "mbconv-wider", "toy", "smoke"};
}

UNetConfig preset(const std::string& name) {
    UNetConfig c;
    c.name = name;
    if (name == "baseline") {
        c.widths = {60, 120, 180, 240, 480};
        c.block_kind = BlockKind::standard;
        c.expand_ratio = 1;
        c.image_size = {160, 256, 256};
    } else if (name == "mbconv-base") {
        c.widths = {30, 60, 120, 180, 240};
        c.expand_ratio = 2;
        c.image_size = {160, 256, 256};
    } else if (name == "mbconv-deeper") {
        c.widths = {30, 60, 120, 180, 240, 480};
        c.expand_ratio = 2;
        c.image_size = {128, 128, 128};
    } else if (name == "mbconv-wider") {
        c.widths = {30, 60, 120, 180, 240};
        c.expand_ratio = 8;
        c.image_size = {128, 128, 128};
    } else if (name == "toy") {
        c.widths = {4, 8};
        c.expand_ratio = 2;
        c.image_size = {8, 8, 8};
    } else if (name == "smoke") {
        c.widths = {8, 16};
        c.expand_ratio = 2;
        c.image_size = {32, 32, 32};
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    return c;
}

UNetConfig toy_analog(const UNetConfig& cfg, std::size_t max_width, std::size_t max_extent) {
    UNetConfig t = cfg;
    t.name = cfg.name + "-toy";
    std::size_t max_levels = 1;
    while ((std::size_t{1} << max_levels) <= max_extent) ++max_levels;
    if (t.widths.size() > max_levels) t.widths.resize(max_levels);
    const double scale = std::min(1.0, static_cast<double>(max_width) / static_cast<double>(t.widths.back()));
    std::size_t prev = 0;
    for (auto& w : t.widths) {
        std::size_t s = 2 * static_cast<std::size_t>(std::llround(static_cast<double>(w) * scale / 2.0));
        s = std::max<std::size_t>({s, 2, prev + 2});
        w = prev = s;
    }
    for (auto& e : t.image_size) e = std::min(e, max_extent);
    const std::size_t g = t.grid();
    for (auto& e : t.image_size) e = std::max(g, e / g * g);
    return t;
}

nlohmann::json to_json(const UNetConfig& cfg) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["name"] = cfg.name;
    j["in_ch"] = cfg.in_ch;
    j["num_classes"] = cfg.num_classes;
    j["widths"] = cfg.widths;
    j["expand_ratio"] = cfg.expand_ratio;
    j["block_kind"] = block_kind_name(cfg.block_kind);
    j["image_size"] = cfg.image_size;
    j["group_size"] = cfg.group_size;
    j["eps"] = cfg.eps;
    if (std::isfinite(cfg.relu_cap)) j["relu_cap"] = cfg.relu_cap;
    return j;
}

UNetConfig config_from_json(const nlohmann::json& j) {
    try {
        UNetConfig c;
        if (j.contains("preset")) c = preset(j.at("preset").get<std::string>());
        if (j.contains("name")) c.name = j.at("name").get<std::string>();
        if (j.contains("in_ch")) c.in_ch = j.at("in_ch").get<std::size_t>();
        if (j.contains("num_classes")) c.num_classes = j.at("num_classes").get<std::size_t>();
        if (j.contains("widths")) c.widths = j.at("widths").get<std::vector<std::size_t>>();
        if (j.contains("expand_ratio") && !j.at("expand_ratio").is_null()) c.expand_ratio = j.at("expand_ratio").get<std::size_t>();
        if (j.contains("block_kind")) c.block_kind = parse_block_kind(j.at("block_kind").get<std::string>());
        if (j.contains("image_size")) c.image_size = j.at("image_size").get<std::array<std::size_t, 3>>();
        if (j.contains("group_size")) c.group_size = j.at("group_size").get<std::size_t>();
        if (j.contains("eps")) c.eps = j.at("eps").get<double>();
        if (j.contains("relu_cap")) c.relu_cap = j.at("relu_cap").get<double>();
        validate(c);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

UNetConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

}  // namespace revunet
