// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include "revunet/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "revunet/rng.hpp"

namespace revunet {

nlohmann::json to_json(const EpochMetrics& m) {
    return {{"epoch", m.epoch},
            {"step", m.step},
            {"loss", m.loss},
            {"dice", m.holdout_dice},
            {"mean_dice", m.holdout_mean_dice},
            {"lr", m.lr},
            {"peak_ledger_bytes", m.peak_ledger_bytes}};
}

template <typename T>
LabelMap segment(const Model<T>& model, const Tensor5f& volume) {
    return argmax_labels(model.forward(tensor_cast<T>(volume)));
}

template <typename T>
Evaluation evaluate(const Model<T>& model, const std::vector<Phantom>& data) {
    const std::size_t C = model.config().num_classes;
    Evaluation ev;
    ev.per_class.assign(C, 0.0);
    for (const auto& p : data) {
        const auto d = per_class_dice(segment(model, p.volume), p.labels, C);
        for (std::size_t c = 0; c < C; ++c) ev.per_class[c] += d[c];
        ev.per_image_mean.push_back(std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(C));
    }
    if (!data.empty()) {
        for (auto& v : ev.per_class) v /= static_cast<double>(data.size());
    }
    ev.mean = std::accumulate(ev.per_class.begin(), ev.per_class.end(), 0.0) / static_cast<double>(C);
    return ev;
}

template <typename T>
TrainResult<T> train(const UNetConfig& cfg, const std::vector<Phantom>& train_set,
                     const std::vector<Phantom>& holdout, const TrainOptions& opt) {
    TrainResult<T> r{Model<T>::build(cfg, derive_seed(opt.seed, "model.init")), {}, {}};
    Model<T>& model = r.model;
    r.initial = evaluate(model, holdout);
    if (opt.epochs == 0 || train_set.empty()) return r;
    if (opt.epochs > opt.schedule.total_epochs) {
        throw std::invalid_argument("requested epochs exceed the schedule length");
    }

    Adam<T> adam(model.params());
    std::size_t step = 0;
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        if (opt.max_steps && step >= opt.max_steps) break;
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle(derive_seed(opt.seed, "train.order", epoch));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

        const double lr = opt.schedule.lr_at(epoch);
        double loss_sum = 0.0;
        std::size_t seen = 0, peak = 0;
        for (std::size_t idx : order) {
            if (opt.max_steps && step >= opt.max_steps) break;
            const Phantom* sample = &train_set[idx];
            Phantom aug;
            if (opt.augment) {
                const std::uint64_t s = derive_seed(opt.seed, "train.augment", epoch, idx);
                aug = revunet::augment(*sample, sample_augment_params(s, opt.bounds), s);
                sample = &aug;
            }
            Tape<T> tape = model.make_tape();
            const Tensor5<T> logits = model.forward(tensor_cast<T>(sample->volume), opt.strategy, &tape);
            const DiceLoss<T> l = soft_dice_loss(logits, sample->labels, opt.smoothing);
            Gradients<T> grads = model.params().zeros_like();
            model.backward(tape, l.dlogits, grads);
            peak = std::max(peak, ledger_peak(tape));
            adam.step(model.params(), grads, lr);
            loss_sum += l.loss;
            ++seen;
            ++step;
        }
        EpochMetrics m;
        m.epoch = epoch;
        m.step = step;
        m.loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
        const Evaluation ev = evaluate(model, holdout);
        m.holdout_dice = ev.per_class;
        m.holdout_mean_dice = ev.mean;
        m.lr = lr;
        m.peak_ledger_bytes = peak * sizeof(T);
        if (opt.log) *opt.log << to_json(m).dump() << '\n';
        r.log.push_back(std::move(m));
    }
    return r;
}

std::pair<std::size_t, std::size_t> holdout_split(std::size_t total, std::size_t train_part,
                                                  std::size_t holdout_part) {
    if (train_part + holdout_part == 0) throw std::invalid_argument("empty split proportions");
    std::size_t hold = static_cast<std::size_t>(std::llround(static_cast<double>(total) * static_cast<double>(holdout_part) /
                                                             static_cast<double>(train_part + holdout_part)));
    if (total >= 2) hold = std::clamp<std::size_t>(hold, 1, total - 1);
    return {total - hold, hold};
}

#define REVUNET_INSTANTIATE(T)                                                          \
    template LabelMap segment(const Model<T>&, const Tensor5f&);                        \
    template Evaluation evaluate(const Model<T>&, const std::vector<Phantom>&);         \
    template TrainResult<T> train(const UNetConfig&, const std::vector<Phantom>&,       \
                                  const std::vector<Phantom>&, const TrainOptions&);

REVUNET_INSTANTIATE(float)
REVUNET_INSTANTIATE(double)
#undef REVUNET_INSTANTIATE

}  // namespace revunet
