// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Self-verification suites run by `revunet gradcheck`, all in double
// precision on a reduced copy of the configuration.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "revunet/config.hpp"

namespace revunet {

struct CheckResult {
    std::string name;
    double worst = 0.0;
    double tolerance = 0.0;
    std::string worst_item;  // parameter name, block or op that produced `worst`
    std::size_t probes = 0;
    std::size_t skipped = 0;  // samples discarded because their stencil crossed a kink
    bool pass = true;
};

struct GradcheckOptions {
    std::size_t roundtrip_seeds = 5;
    std::size_t fd_samples = 200;
    std::size_t op_probes = 100;
    double fd_step = 1e-5;
    double roundtrip_tol = 1e-10;
    double equivalence_tol = 1e-10;
    double network_fd_tol = 1e-5;
    double op_fd_tol = 1e-6;
    // In the network check the relative-error denominator is floored at this
    // fraction of the largest gradient magnitude, so entries that are zero up to
    // double round-off (about 1e-8 absolute at step 1e-5) are compared absolutely.
    double network_floor_fraction = 1e-3;
    // A sampled parameter whose +-h stencil flips a ReLU mask or a max-pool
    // winner has no valid central difference and is replaced. At most this many
    // replacements per requested sample.
    std::size_t kink_resample_factor = 4;
};

struct GradcheckReport {
    UNetConfig config;  // the reduced configuration actually checked
    std::vector<CheckResult> checks;
    bool pass() const;
    const CheckResult* worst_failure() const;
};

// |a - b| / max(|a|, |b|, floor)
double relative_error(double a, double b, double floor = 1e-6);

GradcheckReport run_gradcheck(const UNetConfig& cfg, std::uint64_t seed, const GradcheckOptions& opt = {});

nlohmann::json to_json(const GradcheckReport& r);

}  // namespace revunet
