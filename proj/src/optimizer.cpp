// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include "revunet/optimizer.hpp"

#include <cmath>

namespace revunet {

template <typename T>
Adam<T>::Adam(const ParamStore<T>& params, AdamOptions opt) : opt_(opt) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_.emplace_back(params[i].numel(), 0.0);
        v_.emplace_back(params[i].numel(), 0.0);
    }
}

template <typename T>
void Adam<T>::step(ParamStore<T>& params, const Gradients<T>& grads, double lr) {
    if (grads.size() != params.size() || params.size() != m_.size()) {
        throw std::invalid_argument("optimizer: gradient/parameter count mismatch");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (grads[i].numel() != m_[i].size()) throw std::invalid_argument("optimizer: shape mismatch for " + grads.name(i));
        for (T g : grads.values(i)) {
            if (!std::isfinite(static_cast<double>(g))) {
                throw NonFiniteGradient("non-finite gradient in parameter '" + grads.name(i) + "' at step " +
                                        std::to_string(t_ + 1));
            }
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto g = grads.values(i);
        T* w = params.mutable_value(i).raw();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < m.size(); ++j) {
            const double gj = static_cast<double>(g[j]);
            m[j] = opt_.beta1 * m[j] + (1.0 - opt_.beta1) * gj;
            v[j] = opt_.beta2 * v[j] + (1.0 - opt_.beta2) * gj * gj;
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            w[j] = static_cast<T>(static_cast<double>(w[j]) - lr * mhat / (std::sqrt(vhat) + opt_.eps));
        }
    }
}

template class Adam<float>;
template class Adam<double>;

double LrSchedule::lr_at(std::size_t epoch) const {
    if (epoch >= total_epochs) {
        throw std::out_of_range("epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(total_epochs) + ")");
    }
    double lr = base_lr;
    for (std::size_t e : drop_epochs) {
        if (epoch >= e) lr /= drop_factor;
    }
    return lr;
}

nlohmann::json to_json(const LrSchedule& s) {
    return {{"base_lr", s.base_lr}, {"drop_factor", s.drop_factor}, {"drop_epochs", s.drop_epochs},
            {"total_epochs", s.total_epochs}};
}

}  // namespace revunet
