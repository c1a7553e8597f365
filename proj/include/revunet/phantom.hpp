// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic four-channel volumes with nested lesion labels.
//
// A head ellipsoid holds background tissue; outside it every channel is 0.
// Three nested ellipsoids E1 ⊇ E2 ⊇ E3 (enforced by intersection) give
//   label 1 inside E1, 2 inside E1∩E2, 3 inside E1∩E2∩E3,
// so the support of label >= k shrinks as k grows.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "revunet/labels.hpp"
#include "revunet/tensor.hpp"

namespace revunet {

struct Phantom {
    Tensor5f volume;  // (1, 4, d, h, w), values in [0, 1]
    LabelMap labels;

    friend bool operator==(const Phantom& a, const Phantom& b) {
        return bitwise_equal(a.volume, b.volume) && a.labels == b.labels;
    }
};

struct PhantomOptions {
    double noise_std = 0.04;
    double min_radius = 0.18;  // lesion outer radius, fraction of extent
    double max_radius = 0.30;
    double middle_scale = 0.7;
    double core_scale = 0.45;
};

constexpr std::size_t kPhantomChannels = 4;
constexpr std::size_t kPhantomClasses = 4;
constexpr std::size_t kMinPhantomExtent = 16;

Phantom make_phantom(std::uint64_t seed, std::array<std::size_t, 3> size, const PhantomOptions& opt = {});

// True when every label is < num_classes and no voxel labelled 2 or higher
// has a face neighbour labelled 0, i.e. inner regions are wrapped in lesion
// tissue.
bool labels_nested(const LabelMap& labels, std::size_t num_classes = kPhantomClasses);

// Fraction of voxels per class.
std::vector<double> class_fractions(const LabelMap& labels, std::size_t num_classes = kPhantomClasses);

// Corpus on disk: <dir>/phantom_XXXX_volume.rvt, <dir>/phantom_XXXX_labels.rvt
// and <dir>/index.json listing seeds, sizes and file names.
void write_corpus(const std::vector<Phantom>& phantoms, const std::vector<std::uint64_t>& seeds,
                  const std::filesystem::path& dir);
std::vector<Phantom> read_corpus(const std::filesystem::path& dir);

}  // namespace revunet
