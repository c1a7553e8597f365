// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "revunet/params.hpp"

namespace revunet {

class NonFiniteGradient : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam. Moments are kept in double regardless of T.
template <typename T>
class Adam {
 public:
    explicit Adam(const ParamStore<T>& params, AdamOptions opt = {});

    // Throws NonFiniteGradient (naming the parameter) before touching anything
    // if any gradient entry is NaN or infinite.
    void step(ParamStore<T>& params, const Gradients<T>& grads, double lr);

    std::size_t steps() const { return t_; }
    const std::vector<std::vector<double>>& first_moments() const { return m_; }
    const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
    AdamOptions opt_;
    std::size_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

extern template class Adam<float>;
extern template class Adam<double>;

// Piecewise-constant schedule: base_lr divided by drop_factor once for every
// drop epoch already reached.
struct LrSchedule {
    double base_lr = 1e-4;
    double drop_factor = 5.0;
    std::vector<std::size_t> drop_epochs{250, 400};
    std::size_t total_epochs = 500;

    double lr_at(std::size_t epoch) const;
};

nlohmann::json to_json(const LrSchedule& s);

}  // namespace revunet
