// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include "revunet/loss.hpp"

#include <algorithm>
#include <cmath>

namespace revunet {

template <typename T>
DiceLoss<T> soft_dice_loss(const Tensor5<T>& logits, const LabelMap& labels, double s) {
    const Shape5& sh = logits.shape();
    if (sh.n != 1) throw ShapeError("soft_dice_loss expects batch size 1");
    if (labels.dims != std::array<std::size_t, 3>{sh.d, sh.h, sh.w}) {
        throw ShapeError("labels do not match logits " + sh.str());
    }
    check_label_range(labels, sh.c);
    if (s < 0.0) throw std::invalid_argument("smoothing must be non-negative");
    const std::size_t C = sh.c, V = sh.spatial();

    std::vector<double> prob(C * V);
    for (std::size_t v = 0; v < V; ++v) {
        double mx = -INFINITY;
        for (std::size_t c = 0; c < C; ++c) mx = std::max(mx, static_cast<double>(logits[c * V + v]));
        double z = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            const double e = std::exp(static_cast<double>(logits[c * V + v]) - mx);
            prob[c * V + v] = e;
            z += e;
        }
        for (std::size_t c = 0; c < C; ++c) prob[c * V + v] /= z;
    }

    std::vector<double> inter(C, 0.0), psum(C, 0.0), ysum(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t v = 0; v < V; ++v) {
            const double p = prob[c * V + v];
            psum[c] += p;
            if (labels.data[v] == c) {
                inter[c] += p;
                ysum[c] += 1.0;
            }
        }
    }

    DiceLoss<T> out;
    out.soft_dice.resize(C);
    std::vector<double> denom(C);
    double mean = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
        denom[c] = psum[c] + ysum[c] + s;
        out.soft_dice[c] = denom[c] > 0.0 ? (2.0 * inter[c] + s) / denom[c] : 1.0;
        mean += out.soft_dice[c];
    }
    out.loss = 1.0 - mean / static_cast<double>(C);

    // dL/dp_c(v) = -(1/C) * (2 y_c(v) / den_c - (2 I_c + s) / den_c^2)
    std::vector<double> gp(C * V);
    for (std::size_t c = 0; c < C; ++c) {
        if (denom[c] <= 0.0) continue;
        const double a = 2.0 / denom[c];
        const double b = (2.0 * inter[c] + s) / (denom[c] * denom[c]);
        for (std::size_t v = 0; v < V; ++v) {
            const double y = labels.data[v] == c ? 1.0 : 0.0;
            gp[c * V + v] = -(a * y - b) / static_cast<double>(C);
        }
    }
    out.dlogits = Tensor5<T>(sh);
    for (std::size_t v = 0; v < V; ++v) {
        double dot = 0.0;
        for (std::size_t c = 0; c < C; ++c) dot += prob[c * V + v] * gp[c * V + v];
        for (std::size_t c = 0; c < C; ++c) {
            out.dlogits[c * V + v] = static_cast<T>(prob[c * V + v] * (gp[c * V + v] - dot));
        }
    }
    return out;
}

double dice_score(const LabelMap& pred, const LabelMap& truth, std::uint8_t cls) {
    if (pred.dims != truth.dims) throw ShapeError("dice_score: label maps differ in shape");
    std::size_t a = 0, b = 0, both = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool pa = pred.data[i] == cls, tb = truth.data[i] == cls;
        a += pa;
        b += tb;
        both += pa && tb;
    }
    if (a + b == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(a + b);
}

std::vector<double> per_class_dice(const LabelMap& pred, const LabelMap& truth, std::size_t num_classes) {
    std::vector<double> d(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) d[c] = dice_score(pred, truth, static_cast<std::uint8_t>(c));
    return d;
}

double mean_dice(const LabelMap& pred, const LabelMap& truth, std::size_t num_classes) {
    const auto d = per_class_dice(pred, truth, num_classes);
    double s = 0.0;
    for (double x : d) s += x;
    return s / static_cast<double>(num_classes);
}

template DiceLoss<float> soft_dice_loss(const Tensor5<float>&, const LabelMap&, double);
template DiceLoss<double> soft_dice_loss(const Tensor5<double>&, const LabelMap&, double);

}  // namespace revunet
