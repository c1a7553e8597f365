// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Static-graph execution: op descriptors bound to parameter indices, the saved
// context each op needs for its VJP, and the tape that holds those contexts in
// execution order.
//
// Saved-context rules (shared with the analytic memory planner):
//   conv3d / pointwise / depthwise  input tensor
//   group_norm                      input tensor + per-group mean and rstd
//   relu                            output tensor
//   maxpool                         argmax indices (one per output element)
//   upsample / scale                nothing beyond the input shape
// Zero-element contexts are kept on the tape but never registered in the ledger.

#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "revunet/ledger.hpp"
#include "revunet/ops.hpp"
#include "revunet/params.hpp"
#include "revunet/tensor.hpp"

namespace revunet {

enum class OpKind : std::uint8_t { conv3d, pointwise, depthwise, group_norm, relu, maxpool, upsample, scale };

const char* op_kind_name(OpKind k);

struct OpSpec {
    OpKind kind = OpKind::scale;
    std::string name;
    std::ptrdiff_t weight = -1;
    std::ptrdiff_t bias = -1;
    std::ptrdiff_t gamma = -1;
    std::ptrdiff_t beta = -1;
    GroupNormSpec norm{};
    double relu_cap = std::numeric_limits<double>::infinity();
    double factor = 1.0;
};

using OpSequence = std::vector<OpSpec>;

template <typename T>
struct ConvContext {
    Tensor5<T> input;
};

template <typename T>
struct NormContext {
    Tensor5<T> input;
    GroupNormStats<T> stats;
};

template <typename T>
struct ReluContext {
    Tensor5<T> output;
};

struct PoolContext {
    Shape5 input_shape;
    std::vector<std::uint32_t> argmax;
};

struct ShapeContext {
    Shape5 input_shape;
};

// Output of a reversible block, kept instead of any F/G intermediates.
template <typename T>
struct RevOutputContext {
    Tensor5<T> output;
};

template <typename T>
using OpContext = std::variant<std::monostate, ConvContext<T>, NormContext<T>, ReluContext<T>,
                               PoolContext, ShapeContext, RevOutputContext<T>>;

template <typename T>
std::size_t context_elements(const OpContext<T>& ctx);

template <typename T>
struct TapeEntry {
    std::string node;
    std::string op;
    StorageTag tag = StorageTag::store_all;
    OpContext<T> context;
    std::optional<MemoryLedger::Handle> handle;
};

class ParameterDriftError : public std::logic_error {
 public:
    using std::logic_error::logic_error;
};

template <typename T>
class Tape {
 public:
    explicit Tape(std::uint64_t param_version,
                  std::shared_ptr<MemoryLedger> ledger = std::make_shared<MemoryLedger>())
        : version_(param_version), ledger_(std::move(ledger)) {}

    void push(std::string node, std::string op, StorageTag tag, OpContext<T> ctx);
    const TapeEntry<T>& top() const;
    void pop();

    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    const std::vector<TapeEntry<T>>& entries() const { return entries_; }

    MemoryLedger& ledger() { return *ledger_; }
    const MemoryLedger& ledger() const { return *ledger_; }
    std::shared_ptr<MemoryLedger> shared_ledger() const { return ledger_; }

    std::uint64_t param_version() const { return version_; }
    void check_version(std::uint64_t current) const;

 private:
    std::uint64_t version_;
    std::shared_ptr<MemoryLedger> ledger_;
    std::vector<TapeEntry<T>> entries_;
};

template <typename T>
std::size_t ledger_peak(const Tape<T>& tape) {
    return tape.ledger().peak_elements();
}

template <typename T>
LedgerReport ledger_report(const Tape<T>& tape) {
    return make_ledger_report(tape.ledger(), sizeof(T));
}

// Runs one op. When tape is non-null the op's context is pushed under
// node id prefix + "." + op.name.
template <typename T>
Tensor5<T> run_op(const OpSpec& op, const ParamStore<T>& params, const Tensor5<T>& x,
                  Tape<T>* tape = nullptr, const std::string& prefix = {},
                  StorageTag tag = StorageTag::store_all);

// VJP of one op given its saved context; parameter gradients are accumulated.
template <typename T>
Tensor5<T> run_op_vjp(const OpSpec& op, const ParamStore<T>& params, const OpContext<T>& ctx,
                      const Tensor5<T>& dy, Gradients<T>& grads);

template <typename T>
Tensor5<T> run_sequence(const OpSequence& ops, const ParamStore<T>& params, const Tensor5<T>& x,
                        Tape<T>* tape = nullptr, const std::string& prefix = {},
                        StorageTag tag = StorageTag::store_all);

// Pops ops.size() entries from the tape.
template <typename T>
Tensor5<T> run_sequence_vjp(const OpSequence& ops, const ParamStore<T>& params, Tape<T>& tape,
                            const Tensor5<T>& dy, Gradients<T>& grads);

// Parameter indices referenced by an op sequence, in op order.
std::vector<std::size_t> referenced_params(const OpSequence& ops);

std::string join_id(const std::string& prefix, const std::string& name);

namespace testing {

// Fault injection for verification tooling: scales the input gradient of every
// op of the given kind by factor. Cleared with clear_vjp_fault().
void set_vjp_fault(OpKind kind, double factor);
void clear_vjp_fault();

}  // namespace testing

}  // namespace revunet
