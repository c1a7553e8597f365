// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Parameter store on disk: one RVT1 file per tensor plus manifest.json
//   {"schema_version": 1, "precision": "single", "config": {...},
//    "params": [{"name": ..., "file": ..., "shape": [n,c,d,h,w]}, ...]}

#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "revunet/config.hpp"
#include "revunet/params.hpp"

namespace revunet {

template <typename T>
void save_params(const ParamStore<T>& p, const std::filesystem::path& dir,
                 const std::optional<UNetConfig>& cfg = std::nullopt);

// Loads values into an existing store with matching names and shapes.
template <typename T>
void load_params_into(ParamStore<T>& p, const std::filesystem::path& dir);

nlohmann::json read_manifest(const std::filesystem::path& dir);

}  // namespace revunet
