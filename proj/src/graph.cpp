// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include "revunet/graph.hpp"

#include <atomic>
#include <mutex>

namespace revunet {

const char* op_kind_name(OpKind k) {
    switch (k) {
        case OpKind::conv3d: return "conv3d";
        case OpKind::pointwise: return "pointwise_conv3d";
        case OpKind::depthwise: return "depthwise_conv3d";
        case OpKind::group_norm: return "group_norm";
        case OpKind::relu: return "relu";
        case OpKind::maxpool: return "maxpool3d";
        case OpKind::upsample: return "trilinear_upsample";
        case OpKind::scale: return "scale";
    }
    return "?";
}

std::string join_id(const std::string& prefix, const std::string& name) {
    if (prefix.empty()) return name;
    if (name.empty()) return prefix;
    return prefix + "." + name;
}

namespace testing {
namespace {
std::mutex g_fault_mu;
std::optional<std::pair<OpKind, double>> g_fault;
}  // namespace

void set_vjp_fault(OpKind kind, double factor) {
    std::lock_guard lock(g_fault_mu);
    g_fault = {kind, factor};
}

void clear_vjp_fault() {
    std::lock_guard lock(g_fault_mu);
    g_fault.reset();
}

std::optional<double> fault_for(OpKind kind) {
    std::lock_guard lock(g_fault_mu);
    if (g_fault && g_fault->first == kind) return g_fault->second;
    return std::nullopt;
}

}  // namespace testing

template <typename T>
std::size_t context_elements(const OpContext<T>& ctx) {
    struct Visitor {
        std::size_t operator()(const std::monostate&) const { return 0; }
        std::size_t operator()(const ConvContext<T>& c) const { return c.input.numel(); }
        std::size_t operator()(const NormContext<T>& c) const {
            return c.input.numel() + c.stats.mean.size() + c.stats.rstd.size();
        }
        std::size_t operator()(const ReluContext<T>& c) const { return c.output.numel(); }
        std::size_t operator()(const PoolContext& c) const { return c.argmax.size(); }
        std::size_t operator()(const ShapeContext&) const { return 0; }
        std::size_t operator()(const RevOutputContext<T>& c) const { return c.output.numel(); }
    };
    return std::visit(Visitor{}, ctx);
}

template <typename T>
void Tape<T>::push(std::string node, std::string op, StorageTag tag, OpContext<T> ctx) {
    TapeEntry<T> e{std::move(node), std::move(op), tag, std::move(ctx), std::nullopt};
    const std::size_t n = context_elements(e.context);
    if (n > 0) e.handle = ledger_->acquire({e.node, e.op, n, tag});
    entries_.push_back(std::move(e));
}

template <typename T>
const TapeEntry<T>& Tape<T>::top() const {
    if (entries_.empty()) throw std::logic_error("tape underflow");
    return entries_.back();
}

template <typename T>
void Tape<T>::pop() {
    if (entries_.empty()) throw std::logic_error("tape underflow");
    if (entries_.back().handle) ledger_->release(*entries_.back().handle);
    entries_.pop_back();
}

template <typename T>
void Tape<T>::check_version(std::uint64_t current) const {
    if (current != version_) {
        throw ParameterDriftError("parameters changed between forward (version " +
                                  std::to_string(version_) + ") and backward (version " +
                                  std::to_string(current) + ")");
    }
}

namespace {

template <typename T>
std::span<const T> optional_vec(const ParamStore<T>& p, std::ptrdiff_t idx) {
    if (idx < 0) return {};
    return p.values(static_cast<std::size_t>(idx));
}

template <typename T>
const Tensor5<T>& weight_of(const OpSpec& op, const ParamStore<T>& p) {
    if (op.weight < 0) throw std::logic_error("op '" + op.name + "' has no weight");
    return p[static_cast<std::size_t>(op.weight)];
}

}  // namespace

template <typename T>
Tensor5<T> run_op(const OpSpec& op, const ParamStore<T>& params, const Tensor5<T>& x, Tape<T>* tape,
                  const std::string& prefix, StorageTag tag) {
    OpContext<T> ctx;
    Tensor5<T> y;
    switch (op.kind) {
        case OpKind::conv3d:
            y = conv3d(x, weight_of(op, params), optional_vec(params, op.bias));
            if (tape) ctx = ConvContext<T>{x};
            break;
        case OpKind::pointwise:
            y = pointwise_conv3d(x, weight_of(op, params), optional_vec(params, op.bias));
            if (tape) ctx = ConvContext<T>{x};
            break;
        case OpKind::depthwise:
            y = depthwise_conv3d(x, weight_of(op, params), optional_vec(params, op.bias));
            if (tape) ctx = ConvContext<T>{x};
            break;
        case OpKind::group_norm: {
            GroupNormStats<T> stats;
            y = group_norm(x, optional_vec(params, op.gamma), optional_vec(params, op.beta), op.norm,
                           tape ? &stats : nullptr);
            if (tape) ctx = NormContext<T>{x, std::move(stats)};
            break;
        }
        case OpKind::relu:
            y = relu(x, op.relu_cap);
            if (tape) ctx = ReluContext<T>{y};
            break;
        case OpKind::maxpool: {
            auto r = maxpool3d(x);
            y = std::move(r.output);
            if (tape) ctx = PoolContext{x.shape(), std::move(r.argmax)};
            break;
        }
        case OpKind::upsample:
            y = trilinear_upsample(x);
            if (tape) ctx = ShapeContext{x.shape()};
            break;
        case OpKind::scale:
            y = scaled(x, static_cast<T>(op.factor));
            if (tape) ctx = ShapeContext{x.shape()};
            break;
    }
    if (tape) tape->push(join_id(prefix, op.name), op_kind_name(op.kind), tag, std::move(ctx));
    return y;
}

template <typename T>
Tensor5<T> run_op_vjp(const OpSpec& op, const ParamStore<T>& params, const OpContext<T>& ctx,
                      const Tensor5<T>& dy, Gradients<T>& grads) {
    auto bad = [&]() -> std::logic_error {
        return std::logic_error("context mismatch for op '" + op.name + "' (" + op_kind_name(op.kind) + ")");
    };
    Tensor5<T> dx;
    switch (op.kind) {
        case OpKind::conv3d:
        case OpKind::pointwise:
        case OpKind::depthwise: {
            const auto* c = std::get_if<ConvContext<T>>(&ctx);
            if (!c) throw bad();
            const auto& w = weight_of(op, params);
            ConvGrads<T> g = op.kind == OpKind::depthwise
                                 ? depthwise_conv3d_vjp(c->input, w, op.bias >= 0, dy)
                                 : conv3d_vjp(c->input, w, op.bias >= 0, dy);
            grads.accumulate(static_cast<std::size_t>(op.weight), g.dweight.data());
            if (op.bias >= 0) grads.accumulate(static_cast<std::size_t>(op.bias), g.dbias);
            dx = std::move(g.dx);
            break;
        }
        case OpKind::group_norm: {
            const auto* c = std::get_if<NormContext<T>>(&ctx);
            if (!c) throw bad();
            auto g = group_norm_vjp(c->input, optional_vec(params, op.gamma), op.norm, c->stats, dy);
            grads.accumulate(static_cast<std::size_t>(op.gamma), g.dgamma);
            grads.accumulate(static_cast<std::size_t>(op.beta), g.dbeta);
            dx = std::move(g.dx);
            break;
        }
        case OpKind::relu: {
            const auto* c = std::get_if<ReluContext<T>>(&ctx);
            if (!c) throw bad();
            dx = relu_vjp(c->output, dy, op.relu_cap);
            break;
        }
        case OpKind::maxpool: {
            const auto* c = std::get_if<PoolContext>(&ctx);
            if (!c) throw bad();
            dx = maxpool3d_vjp<T>(c->input_shape, c->argmax, dy);
            break;
        }
        case OpKind::upsample: {
            const auto* c = std::get_if<ShapeContext>(&ctx);
            if (!c) throw bad();
            dx = trilinear_upsample_vjp(c->input_shape, dy);
            break;
        }
        case OpKind::scale: {
            const auto* c = std::get_if<ShapeContext>(&ctx);
            if (!c || !(c->input_shape == dy.shape())) throw bad();
            dx = scaled(dy, static_cast<T>(op.factor));
            break;
        }
    }
    if (auto f = testing::fault_for(op.kind)) dx = scaled(dx, static_cast<T>(*f));
    return dx;
}

template <typename T>
Tensor5<T> run_sequence(const OpSequence& ops, const ParamStore<T>& params, const Tensor5<T>& x,
                        Tape<T>* tape, const std::string& prefix, StorageTag tag) {
    Tensor5<T> cur = x;
    for (const auto& op : ops) cur = run_op(op, params, cur, tape, prefix, tag);
    return cur;
}

template <typename T>
Tensor5<T> run_sequence_vjp(const OpSequence& ops, const ParamStore<T>& params, Tape<T>& tape,
                            const Tensor5<T>& dy, Gradients<T>& grads) {
    Tensor5<T> g = dy;
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
        g = run_op_vjp(*it, params, tape.top().context, g, grads);
        tape.pop();
    }
    return g;
}

std::vector<std::size_t> referenced_params(const OpSequence& ops) {
    std::vector<std::size_t> out;
    for (const auto& op : ops) {
        for (auto idx : {op.weight, op.bias, op.gamma, op.beta}) {
            if (idx >= 0) out.push_back(static_cast<std::size_t>(idx));
        }
    }
    return out;
}

#define REVUNET_INSTANTIATE(T)                                                                    \
    template class Tape<T>;                                                                       \
    template std::size_t context_elements(const OpContext<T>&);                                   \
    template Tensor5<T> run_op(const OpSpec&, const ParamStore<T>&, const Tensor5<T>&, Tape<T>*, \
                               const std::string&, StorageTag);                                   \
    template Tensor5<T> run_op_vjp(const OpSpec&, const ParamStore<T>&, const OpContext<T>&,     \
                                   const Tensor5<T>&, Gradients<T>&);                             \
    template Tensor5<T> run_sequence(const OpSequence&, const ParamStore<T>&, const Tensor5<T>&, \
                                     Tape<T>*, const std::string&, StorageTag);                   \
    template Tensor5<T> run_sequence_vjp(const OpSequence&, const ParamStore<T>&, Tape<T>&,      \
                                         const Tensor5<T>&, Gradients<T>&);

REVUNET_INSTANTIATE(float)
REVUNET_INSTANTIATE(double)
#undef REVUNET_INSTANTIATE

}  // namespace revunet
