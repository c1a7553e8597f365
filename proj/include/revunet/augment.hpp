// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Spatial and intensity augmentation of phantoms.
//
// Output voxels are produced by inverse mapping. For an output coordinate q the
// source coordinate is obtained by undoing, in this order, the elastic
// displacement, the flips, the isotropic scale and the in-plane (h, w)
// rotation about the d axis, all about the volume centre. Images are sampled
// trilinearly with zero outside the volume, labels by nearest neighbour with
// background outside. The intensity factor is applied last and the result is
// clamped to [0, 1].

#pragma once

#include <array>
#include <cstdint>
#include <functional>

#include <json.hpp>

#include "revunet/phantom.hpp"

namespace revunet {

struct AugmentBounds {
    double max_rotation_deg = 20.0;
    double max_scale_delta = 0.1;
    double max_intensity_delta = 0.1;
    double flip_probability = 0.5;
    double elastic_alpha = 6.0;  // largest displacement, voxels
    double elastic_sigma = 8.0;  // smoothing radius, voxels
};

struct AugmentParams {
    double rotation_deg = 0.0;
    double scale = 1.0;
    std::array<bool, 3> flip{false, false, false};  // (d, h, w)
    double intensity = 1.0;
    double elastic_alpha = 0.0;
    double elastic_sigma = 8.0;

    static AugmentParams identity() { return {}; }
    bool within(const AugmentBounds& b) const;

    friend bool operator==(const AugmentParams&, const AugmentParams&) = default;
};

AugmentParams sample_augment_params(std::uint64_t seed, const AugmentBounds& bounds = {});

nlohmann::json to_json(const AugmentParams& p);
AugmentParams augment_params_from_json(const nlohmann::json& j);

// The seed drives the elastic displacement field only.
Phantom augment(const Phantom& p, const AugmentParams& params, std::uint64_t seed);

// Source coordinate (d, h, w) for every output voxel.
using SourceMap = std::function<std::array<double, 3>(std::size_t, std::size_t, std::size_t)>;

// In-plane rotation about the d axis by the given angle, inverse-mapped.
SourceMap rotation_map(std::array<std::size_t, 3> dims, double degrees);

Tensor5f resample_trilinear(const Tensor5f& volume, const SourceMap& map);
LabelMap resample_nearest(const LabelMap& labels, const SourceMap& map);

}  // namespace revunet
