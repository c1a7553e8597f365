// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include "revunet/rev_block.hpp"

namespace revunet {

template <typename T>
Tensor5<T> RevBlock<T>::apply(const OpSequence& ops, const std::string& prefix, const ParamStore<T>& p,
                              const Tensor5<T>& x, Tape<T>* tape, StorageTag tag) const {
    Tensor5<T> out = run_sequence(ops, p, x, tape, prefix, tag);
    if (!(out.shape() == x.shape())) {
        throw ShapeError("sub-block " + prefix + " maps " + x.shape().str() + " to " + out.shape().str() +
                         "; coupling requires a shape-preserving map");
    }
    return out;
}

template <typename T>
Tensor5<T> RevBlock<T>::forward(const ParamStore<T>& p, const Tensor5<T>& x, Tape<T>* tape,
                                Strategy strategy) const {
    auto [x1, x2] = channel_split(x);
    const bool keep_inner = tape != nullptr && strategy == Strategy::store_all;
    Tape<T>* inner = keep_inner ? tape : nullptr;
    Tensor5<T> y1 = ew_add(x1, apply(f_, f_prefix(), p, x2, inner, StorageTag::store_all));
    Tensor5<T> y2 = ew_add(x2, apply(g_, g_prefix(), p, y1, inner, StorageTag::store_all));
    Tensor5<T> y = channel_concat(y1, y2);
    if (tape != nullptr && strategy == Strategy::reversible) {
        tape->push(name_, "rev_block", StorageTag::reversible, RevOutputContext<T>{y});
    }
    return y;
}

template <typename T>
Tensor5<T> RevBlock<T>::inverse(const ParamStore<T>& p, const Tensor5<T>& y) const {
    auto [y1, y2] = channel_split(y);
    Tensor5<T> x2 = ew_sub(y2, apply(g_, g_prefix(), p, y1, nullptr, StorageTag::recompute));
    Tensor5<T> x1 = ew_sub(y1, apply(f_, f_prefix(), p, x2, nullptr, StorageTag::recompute));
    return channel_concat(x1, x2);
}

template <typename T>
Tensor5<T> RevBlock<T>::backward_from_output(const ParamStore<T>& p, const Tensor5<T>& y,
                                             const Tensor5<T>& dy, Gradients<T>& grads,
                                             MemoryLedger* ledger) const {
    if (!(y.shape() == dy.shape())) throw ShapeError("rev backward: dy " + dy.shape().str() + " vs y " + y.shape().str());
    auto [y1, y2] = channel_split(y);
    auto [dy1, dy2] = channel_split(dy);

    // A non-owning alias keeps recompute entries on the caller's ledger.
    std::shared_ptr<MemoryLedger> shared =
        ledger ? std::shared_ptr<MemoryLedger>(ledger, [](MemoryLedger*) {}) : std::make_shared<MemoryLedger>();
    Tape<T> scratch(p.version(), shared);

    Tensor5<T> gy1 = apply(g_, g_prefix(), p, y1, &scratch, StorageTag::recompute);
    Tensor5<T> x2 = ew_sub(y2, gy1);
    Tensor5<T> dy1_total = ew_add(dy1, run_sequence_vjp(g_, p, scratch, dy2, grads));

    apply(f_, f_prefix(), p, x2, &scratch, StorageTag::recompute);
    Tensor5<T> dx2 = ew_add(dy2, run_sequence_vjp(f_, p, scratch, dy1_total, grads));
    return channel_concat(dy1_total, dx2);
}

template <typename T>
Tensor5<T> RevBlock<T>::backward(const ParamStore<T>& p, Tape<T>& tape, const Tensor5<T>& dy,
                                 Gradients<T>& grads) const {
    tape.check_version(p.version());
    const auto& top = tape.top();
    if (const auto* rev = std::get_if<RevOutputContext<T>>(&top.context)) {
        if (top.node != name_) throw std::logic_error("tape top is " + top.node + ", expected " + name_);
        Tensor5<T> dx = backward_from_output(p, rev->output, dy, grads, &tape.ledger());
        tape.pop();
        return dx;
    }
    auto [dy1, dy2] = channel_split(dy);
    Tensor5<T> dy1_total = ew_add(dy1, run_sequence_vjp(g_, p, tape, dy2, grads));
    Tensor5<T> dx2 = ew_add(dy2, run_sequence_vjp(f_, p, tape, dy1_total, grads));
    return channel_concat(dy1_total, dx2);
}

template class RevBlock<float>;
template class RevBlock<double>;

}  // namespace revunet
