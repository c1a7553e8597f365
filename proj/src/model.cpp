// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include "revunet/model.hpp"

namespace revunet {

namespace {

std::string lvl(const char* stem, std::size_t i) { return stem + std::to_string(i); }

// The classifier feeds a softmax, not a ReLU. A full He-scale head starts with
// one class dominating large regions, and under soft Dice a class whose
// probability collapses early at its own voxels receives almost no gradient.
constexpr double kHeadInitGain = 0.3;

template <typename T>
OpSpec biased_pointwise(ParamStore<T>& p, const std::string& node, std::size_t in, std::size_t out,
                        std::uint64_t seed, double gain = 1.0) {
    OpSpec op;
    op.kind = OpKind::pointwise;
    op.name = node;
    op.weight = static_cast<std::ptrdiff_t>(add_he_normal(p, node + ".weight", Shape5{out, in, 1, 1, 1}, in, seed, gain));
    op.bias = static_cast<std::ptrdiff_t>(add_channel_vector(p, node + ".bias", out, T(0)));
    return op;
}

OpSpec simple_op(OpKind kind, const std::string& node) {
    OpSpec op;
    op.kind = kind;
    op.name = node;
    return op;
}

}  // namespace

template <typename T>
Model<T> Model<T>::build(const UNetConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    Model m;
    m.cfg_ = cfg;
    const NormOptions norm = cfg.norm();
    const std::size_t L = cfg.levels();
    for (std::size_t i = 0; i < L; ++i) {
        Level level;
        if (i > 0) level.pool = simple_op(OpKind::maxpool, lvl("enc", i) + ".pool");
        const std::size_t in = i == 0 ? cfg.in_ch : cfg.widths[i - 1];
        level.raise = biased_pointwise(m.params_, lvl("enc", i) + ".raise", in, cfg.widths[i], seed);
        m.enc_.push_back(level);

        const std::string rev = lvl("enc", i) + ".rev";
        const std::size_t half = cfg.widths[i] / 2;
        OpSequence f = build_block(cfg.block_kind, m.params_, rev + ".F", half, cfg.expand_ratio, norm, seed);
        OpSequence g = build_block(cfg.block_kind, m.params_, rev + ".G", half, cfg.expand_ratio, norm, seed);
        m.rev_.emplace_back(rev, std::move(f), std::move(g));
    }
    m.dec_.resize(L - 1);
    for (std::size_t k = L - 1; k-- > 0;) {
        DecoderLevel& d = m.dec_[k];
        d.up = simple_op(OpKind::upsample, lvl("dec", k) + ".up");
        d.reduce = biased_pointwise(m.params_, lvl("dec", k) + ".reduce", cfg.widths[k + 1], cfg.widths[k], seed);
        d.block = build_standard_block(m.params_, lvl("dec", k) + ".block", cfg.widths[k], norm, seed);
    }
    m.head_ = biased_pointwise(m.params_, "head", cfg.widths[0], cfg.num_classes, seed, kHeadInitGain);
    return m;
}

template <typename T>
Shape5 Model<T>::input_shape() const {
    return Shape5{1, cfg_.in_ch, cfg_.image_size[0], cfg_.image_size[1], cfg_.image_size[2]};
}

template <typename T>
Tensor5<T> Model<T>::forward(const Tensor5<T>& x, Strategy strategy, Tape<T>* tape,
                             std::vector<Tensor5<T>>* encoder_outputs) const {
    const Shape5& s = x.shape();
    if (s.n != 1) throw ShapeError("batch size must be 1, got " + std::to_string(s.n));
    if (s.c != cfg_.in_ch) throw ShapeError("expected " + std::to_string(cfg_.in_ch) + " input channels, got " + std::to_string(s.c));
    const std::size_t g = cfg_.grid();
    if (s.d % g || s.h % g || s.w % g) {
        throw ShapeError("input " + s.str() + " is not divisible by " + std::to_string(g) + " on every spatial axis");
    }
    if (tape) tape->check_version(params_.version());
    // Only reversible blocks change what they retain; every other node keeps its context.
    const StorageTag tag = StorageTag::store_all;
    const std::size_t L = cfg_.levels();

    std::vector<Tensor5<T>> skips;
    skips.reserve(L);
    Tensor5<T> cur = x;
    for (std::size_t i = 0; i < L; ++i) {
        if (i > 0) cur = run_op(enc_[i].pool, params_, cur, tape, {}, tag);
        cur = run_op(enc_[i].raise, params_, cur, tape, {}, tag);
        cur = rev_[i].forward(params_, cur, tape, strategy);
        skips.push_back(cur);
    }
    if (encoder_outputs) *encoder_outputs = skips;
    for (std::size_t k = L - 1; k-- > 0;) {
        const DecoderLevel& d = dec_[k];
        cur = run_op(d.up, params_, cur, tape, {}, tag);
        cur = run_op(d.reduce, params_, cur, tape, {}, tag);
        add_inplace(cur, skips[k]);
        cur = run_sequence(d.block, params_, cur, tape, lvl("dec", k) + ".block", tag);
    }
    return run_op(head_, params_, cur, tape, {}, tag);
}

template <typename T>
Tensor5<T> Model<T>::backward(Tape<T>& tape, const Tensor5<T>& dlogits, Gradients<T>& grads) const {
    tape.check_version(params_.version());
    const std::size_t L = cfg_.levels();
    auto vjp_top = [&](const OpSpec& op, const Tensor5<T>& dy) {
        Tensor5<T> dx = run_op_vjp(op, params_, tape.top().context, dy, grads);
        tape.pop();
        return dx;
    };

    Tensor5<T> g = vjp_top(head_, dlogits);
    std::vector<Tensor5<T>> skip_grads(L);
    for (std::size_t k = 0; k + 1 < L; ++k) {
        const DecoderLevel& d = dec_[k];
        g = run_sequence_vjp(d.block, params_, tape, g, grads);
        skip_grads[k] = g;
        g = vjp_top(d.reduce, g);
        g = vjp_top(d.up, g);
    }
    for (std::size_t i = L; i-- > 0;) {
        if (i + 1 < L) add_inplace(g, skip_grads[i]);
        g = rev_[i].backward(params_, tape, g, grads);
        g = vjp_top(enc_[i].raise, g);
        if (i > 0) g = vjp_top(enc_[i].pool, g);
    }
    if (!tape.empty()) throw std::logic_error("tape not fully consumed by backward");
    return g;
}

template class Model<float>;
template class Model<double>;

CropRecord padding_to(std::array<std::size_t, 3> extent, std::array<std::size_t, 3> target) {
    CropRecord r;
    r.original = extent;
    for (std::size_t a = 0; a < 3; ++a) {
        if (target[a] < extent[a]) throw ShapeError("padding target smaller than the volume");
        const std::size_t extra = target[a] - extent[a];
        r.before[a] = extra / 2;
        r.after[a] = extra - extra / 2;
    }
    return r;
}

CropRecord grid_padding(std::array<std::size_t, 3> extent, std::size_t levels) {
    if (levels == 0) throw std::invalid_argument("levels must be >= 1");
    const std::size_t g = std::size_t{1} << (levels - 1);
    std::array<std::size_t, 3> target{};
    for (std::size_t a = 0; a < 3; ++a) target[a] = (extent[a] + g - 1) / g * g;
    return padding_to(extent, target);
}

template <typename T>
Tensor5<T> apply_padding(const Tensor5<T>& v, const CropRecord& rec) {
    if (rec.empty()) return v;
    const Shape5& s = v.shape();
    if (std::array<std::size_t, 3>{s.d, s.h, s.w} != rec.original) throw ShapeError("volume does not match crop record");
    Shape5 o = s;
    o.d += rec.before[0] + rec.after[0];
    o.h += rec.before[1] + rec.after[1];
    o.w += rec.before[2] + rec.after[2];
    Tensor5<T> out(o);
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t d = 0; d < s.d; ++d)
                for (std::size_t h = 0; h < s.h; ++h) {
                    const T* src = v.raw() + v.offset(n, c, d, h, 0);
                    T* dst = out.raw() + out.offset(n, c, d + rec.before[0], h + rec.before[1], rec.before[2]);
                    std::copy(src, src + s.w, dst);
                }
    return out;
}

template <typename T>
Tensor5<T> crop(const Tensor5<T>& v, const CropRecord& rec) {
    if (rec.empty()) return v;
    const Shape5& s = v.shape();
    Shape5 o = s;
    o.d = rec.original[0];
    o.h = rec.original[1];
    o.w = rec.original[2];
    if (s.d != o.d + rec.before[0] + rec.after[0] || s.h != o.h + rec.before[1] + rec.after[1] ||
        s.w != o.w + rec.before[2] + rec.after[2]) {
        throw ShapeError("volume does not match crop record");
    }
    Tensor5<T> out(o);
    for (std::size_t n = 0; n < o.n; ++n)
        for (std::size_t c = 0; c < o.c; ++c)
            for (std::size_t d = 0; d < o.d; ++d)
                for (std::size_t h = 0; h < o.h; ++h) {
                    const T* src = v.raw() + v.offset(n, c, d + rec.before[0], h + rec.before[1], rec.before[2]);
                    std::copy(src, src + o.w, out.raw() + out.offset(n, c, d, h, 0));
                }
    return out;
}

template <typename T>
std::pair<Tensor5<T>, CropRecord> pad_to_grid(const Tensor5<T>& volume, std::size_t levels) {
    const Shape5& s = volume.shape();
    CropRecord rec = grid_padding({s.d, s.h, s.w}, levels);
    return {apply_padding(volume, rec), rec};
}

LabelMap apply_padding(const LabelMap& l, const CropRecord& rec) {
    return labels_from_tensor(apply_padding(labels_to_tensor<float>(l), rec));
}

LabelMap crop(const LabelMap& l, const CropRecord& rec) {
    return labels_from_tensor(crop(labels_to_tensor<float>(l), rec));
}

template <typename T>
LabelMap argmax_labels(const Tensor5<T>& logits) {
    const Shape5& s = logits.shape();
    if (s.n != 1) throw ShapeError("argmax_labels expects batch size 1");
    if (s.c > 256) throw ShapeError("too many classes for an 8-bit label map");
    LabelMap out({s.d, s.h, s.w});
    const std::size_t vox = s.spatial();
    for (std::size_t v = 0; v < vox; ++v) {
        std::size_t best = 0;
        T bv = logits[v];
        for (std::size_t c = 1; c < s.c; ++c) {
            const T x = logits[c * vox + v];
            if (x > bv) {
                bv = x;
                best = c;
            }
        }
        out.data[v] = static_cast<std::uint8_t>(best);
    }
    return out;
}

#define REVUNET_INSTANTIATE(T)                                                                    \
    template std::pair<Tensor5<T>, CropRecord> pad_to_grid(const Tensor5<T>&, std::size_t);      \
    template Tensor5<T> apply_padding(const Tensor5<T>&, const CropRecord&);                     \
    template Tensor5<T> crop(const Tensor5<T>&, const CropRecord&);                              \
    template LabelMap argmax_labels(const Tensor5<T>&);

REVUNET_INSTANTIATE(float)
REVUNET_INSTANTIATE(double)
#undef REVUNET_INSTANTIATE

}  // namespace revunet
