// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "revunet/graph.hpp"

namespace revunet {

// Additive-coupling block on channel halves (x1, x2):
//   y1 = x1 + F(x2),  y2 = x2 + G(y1)
// and its inverse
//   x2 = y2 - G(y1),  x1 = y1 - F(x2).
//
// Under Strategy::store_all the F and G contexts go on the tape as usual.
// Under Strategy::reversible only y is kept; backward rebuilds the inputs from
// y, recomputing G and then F once each on a temporary tape that shares the
// caller's ledger (tagged StorageTag::recompute).
template <typename T>
class RevBlock {
 public:
    RevBlock() = default;
    RevBlock(std::string name, OpSequence f, OpSequence g)
        : name_(std::move(name)), f_(std::move(f)), g_(std::move(g)) {}

    const std::string& name() const { return name_; }
    const OpSequence& f() const { return f_; }
    const OpSequence& g() const { return g_; }

    Tensor5<T> forward(const ParamStore<T>& p, const Tensor5<T>& x, Tape<T>* tape = nullptr,
                       Strategy strategy = Strategy::store_all) const;

    Tensor5<T> inverse(const ParamStore<T>& p, const Tensor5<T>& y) const;

    // Pops this block's tape entries and returns dL/dx. Parameter gradients
    // are accumulated into grads.
    Tensor5<T> backward(const ParamStore<T>& p, Tape<T>& tape, const Tensor5<T>& dy,
                        Gradients<T>& grads) const;

    // Reversible backward from an explicit output, without any forward tape.
    Tensor5<T> backward_from_output(const ParamStore<T>& p, const Tensor5<T>& y, const Tensor5<T>& dy,
                                    Gradients<T>& grads, MemoryLedger* ledger = nullptr) const;

    std::string f_prefix() const { return join_id(name_, "F"); }
    std::string g_prefix() const { return join_id(name_, "G"); }

 private:
    Tensor5<T> apply(const OpSequence& ops, const std::string& prefix, const ParamStore<T>& p,
                     const Tensor5<T>& x, Tape<T>* tape, StorageTag tag) const;

    std::string name_;
    OpSequence f_;
    OpSequence g_;
};

extern template class RevBlock<float>;
extern template class RevBlock<double>;

}  // namespace revunet
