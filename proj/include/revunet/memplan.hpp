// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Closed-form activation memory of a UNetConfig under both storage
// strategies, using the saved-context rules documented in graph.hpp:
//
//   conv / pointwise / depthwise   input numel
//   group norm                     input numel + 2 * groups
//   relu                           output numel
//   maxpool                        output numel (indices, counted at scalar width)
//   upsample                       nothing
//   reversible block (reversible)  output numel; nothing inside F or G
//
// Peak under store-all is the end-of-forward total. Under the reversible
// strategy the backward of block k briefly holds everything retained before
// it, its own output and the larger of the recomputed F or G contexts.

#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "revunet/config.hpp"
#include "revunet/ledger.hpp"

namespace revunet {

struct MemoryEstimate {
    UNetConfig config;
    Strategy strategy = Strategy::store_all;
    std::size_t scalar_bytes = 4;
    std::vector<LedgerEntry> entries;  // forward registration order
    std::size_t retained_elements = 0;  // end of forward
    std::size_t peak_elements = 0;      // over forward and backward
    std::map<std::string, std::size_t> stage_elements;  // "encoder.i", "decoder.i", "head"
    std::size_t param_count = 0;

    std::size_t retained_bytes() const { return retained_elements * scalar_bytes; }
    std::size_t peak_bytes() const { return peak_elements * scalar_bytes; }
    std::size_t param_bytes() const { return param_count * scalar_bytes; }
};

MemoryEstimate estimate(const UNetConfig& cfg, Strategy strategy, Precision precision = Precision::f32);

// Closed-form parameter count of the whole network.
std::size_t model_param_count(const UNetConfig& cfg);

nlohmann::json to_json(const MemoryEstimate& e);

enum class Axis { volume, depth, channels };

const char* axis_name(Axis a);
Axis parse_axis(const std::string& s);

struct BudgetResult {
    Axis axis = Axis::volume;
    Strategy strategy = Strategy::store_all;
    std::size_t budget_bytes = 0;
    // volume: voxels / base voxels; channels: width multiplier; depth: levels / base levels.
    double scale = 1.0;
    UNetConfig config;  // largest feasible configuration
    std::size_t peak_bytes = 0;
    std::size_t levels = 0;  // depth axis only
};

// Scale grid per axis:
//   volume    rod image (g, g, g*k) with g = 2^(levels-1), k = 1, 2, ...
//   channels  widths round(w * m) to even, m in steps of 1/100
//   depth     extra levels of twice the previous width, image padded to the grid
// The result is the last scale before the first infeasible one, which keeps it
// monotone in the budget. Throws ConfigError when the base does not fit.
BudgetResult budget_search(const UNetConfig& base, std::size_t budget_bytes, Axis axis, Strategy strategy,
                           Precision precision = Precision::f32);

UNetConfig scale_channels(const UNetConfig& base, double multiplier);
UNetConfig scale_depth(const UNetConfig& base, std::size_t levels);
UNetConfig volume_rod(const UNetConfig& base, std::size_t cells);

// Parses "123", "1.5GB", "14GiB", "512MB", "64k" and similar; decimal units
// are powers of 1000, binary units (KiB, MiB, GiB) powers of 1024.
std::size_t parse_budget(const std::string& s);

// Claim check for one config: budget = store-all peak of the config itself.
nlohmann::json claims_report(const UNetConfig& cfg, Precision precision = Precision::f32);

}  // namespace revunet
