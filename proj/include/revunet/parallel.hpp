// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace revunet {

// Worker count used by parallel_for. Defaults to 1; results never depend on it
// because each index writes a disjoint slice of the output.
void set_num_threads(std::size_t n);
std::size_t num_threads();

// Runs body(i) for i in [0, count). Work below min_work per index*count is run
// inline to avoid thread start-up cost on tiny tensors.
void parallel_for(std::size_t count, std::size_t work_per_index,
                  const std::function<void(std::size_t)>& body);

}  // namespace revunet
