// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include "revunet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "revunet/parallel.hpp"

namespace revunet {
namespace {

struct KernelGeom {
    std::size_t out_ch, in_ch, k;
};

KernelGeom check_kernel(const Shape5& ws, const char* what) {
    if (ws.d != ws.h || ws.h != ws.w) {
        throw ShapeError(std::string(what) + ": kernel must be cubic, got " + ws.str());
    }
    if (ws.d % 2 == 0) {
        throw ShapeError(std::string(what) + ": kernel size must be odd, got " + std::to_string(ws.d));
    }
    return {ws.n, ws.c, ws.d};
}

void check_bias(std::size_t expected, std::size_t got, const char* what) {
    if (got != 0 && got != expected) {
        throw ShapeError(std::string(what) + ": bias length " + std::to_string(got) + " != " +
                         std::to_string(expected));
    }
}

// Iterates the valid (d, h) rows and w span for one kernel offset. The callback
// receives (output row offset, input row offset, row length) in plane-local
// flat indices, where input = output + offset.
template <typename F>
void for_each_shifted_row(const Shape5& s, long od, long oh, long ow, F&& f) {
    const long D = static_cast<long>(s.d), H = static_cast<long>(s.h), W = static_cast<long>(s.w);
    const long d0 = std::max(0L, -od), d1 = std::min(D, D - od);
    const long h0 = std::max(0L, -oh), h1 = std::min(H, H - oh);
    const long w0 = std::max(0L, -ow), w1 = std::min(W, W - ow);
    if (d0 >= d1 || h0 >= h1 || w0 >= w1) return;
    const std::size_t len = static_cast<std::size_t>(w1 - w0);
    for (long d = d0; d < d1; ++d) {
        for (long h = h0; h < h1; ++h) {
            const long out_off = (d * H + h) * W + w0;
            const long in_off = ((d + od) * H + (h + oh)) * W + (w0 + ow);
            f(static_cast<std::size_t>(out_off), static_cast<std::size_t>(in_off), len);
        }
    }
}

// out_plane += wt * shift(in_plane) over all offsets of a k^3 kernel.
template <typename T>
void accumulate_kernel(const Shape5& s, std::size_t k, const T* wts, const T* in, T* out) {
    const long pad = static_cast<long>(k / 2);
    std::size_t idx = 0;
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            for (std::size_t c = 0; c < k; ++c, ++idx) {
                const T wt = wts[idx];
                for_each_shifted_row(s, static_cast<long>(a) - pad, static_cast<long>(b) - pad,
                                     static_cast<long>(c) - pad,
                                     [&](std::size_t oo, std::size_t io, std::size_t len) {
                                         T* o = out + oo;
                                         const T* x = in + io;
                                         for (std::size_t i = 0; i < len; ++i) o[i] += wt * x[i];
                                     });
            }
        }
    }
}

// dx_plane += transpose of accumulate_kernel applied to dy_plane.
template <typename T>
void accumulate_kernel_transpose(const Shape5& s, std::size_t k, const T* wts, const T* dy, T* dx) {
    const long pad = static_cast<long>(k / 2);
    std::size_t idx = 0;
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            for (std::size_t c = 0; c < k; ++c, ++idx) {
                const T wt = wts[idx];
                for_each_shifted_row(s, static_cast<long>(a) - pad, static_cast<long>(b) - pad,
                                     static_cast<long>(c) - pad,
                                     [&](std::size_t oo, std::size_t io, std::size_t len) {
                                         const T* g = dy + oo;
                                         T* o = dx + io;
                                         for (std::size_t i = 0; i < len; ++i) o[i] += wt * g[i];
                                     });
            }
        }
    }
}

// dw[offset] += sum_q dy[q] * x[q + offset], accumulated in double.
template <typename T>
void accumulate_kernel_weight_grad(const Shape5& s, std::size_t k, const T* dy, const T* x,
                                   double* dw) {
    const long pad = static_cast<long>(k / 2);
    std::size_t idx = 0;
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            for (std::size_t c = 0; c < k; ++c, ++idx) {
                double acc = 0.0;
                for_each_shifted_row(s, static_cast<long>(a) - pad, static_cast<long>(b) - pad,
                                     static_cast<long>(c) - pad,
                                     [&](std::size_t oo, std::size_t io, std::size_t len) {
                                         const T* g = dy + oo;
                                         const T* v = x + io;
                                         for (std::size_t i = 0; i < len; ++i) {
                                             acc += static_cast<double>(g[i]) * static_cast<double>(v[i]);
                                         }
                                     });
                dw[idx] += acc;
            }
        }
    }
}

template <typename T>
std::vector<T> bias_grad(const Tensor5<T>& dy) {
    const Shape5& s = dy.shape();
    std::vector<T> db(s.c);
    for (std::size_t o = 0; o < s.c; ++o) {
        double acc = 0.0;
        for (std::size_t n = 0; n < s.n; ++n) {
            for (T v : dy.plane(n, o)) acc += static_cast<double>(v);
        }
        db[o] = static_cast<T>(acc);
    }
    return db;
}

template <typename T>
Tensor5<T> dense_conv(const Tensor5<T>& x, const Tensor5<T>& weights, std::span<const T> bias,
                      const char* what) {
    const KernelGeom g = check_kernel(weights.shape(), what);
    const Shape5& s = x.shape();
    if (g.in_ch != s.c) {
        throw ShapeError(std::string(what) + ": input has " + std::to_string(s.c) +
                         " channels, kernel expects " + std::to_string(g.in_ch));
    }
    check_bias(g.out_ch, bias.size(), what);
    Shape5 os = s;
    os.c = g.out_ch;
    Tensor5<T> out(os);
    const std::size_t kvol = g.k * g.k * g.k;
    const std::size_t work = g.in_ch * kvol * s.spatial();
    for (std::size_t n = 0; n < s.n; ++n) {
        parallel_for(g.out_ch, work, [&](std::size_t o) {
            T* op = out.plane(n, o).data();
            if (!bias.empty()) std::fill_n(op, s.spatial(), bias[o]);
            for (std::size_t i = 0; i < g.in_ch; ++i) {
                const T* wts = weights.raw() + (o * g.in_ch + i) * kvol;
                accumulate_kernel(s, g.k, wts, x.plane(n, i).data(), op);
            }
        });
    }
    return out;
}

template <typename T>
ConvGrads<T> dense_conv_vjp(const Tensor5<T>& x, const Tensor5<T>& weights, bool has_bias,
                            const Tensor5<T>& dy, const char* what) {
    const KernelGeom g = check_kernel(weights.shape(), what);
    const Shape5& s = x.shape();
    if (g.in_ch != s.c || dy.shape().c != g.out_ch || dy.shape().n != s.n ||
        !dy.shape().same_spatial(s)) {
        throw ShapeError(std::string(what) + " vjp: context/gradient mismatch " + s.str() + " / " +
                         dy.shape().str() + " / " + weights.shape().str());
    }
    const std::size_t kvol = g.k * g.k * g.k;
    const std::size_t work = g.out_ch * kvol * s.spatial();
    ConvGrads<T> r{Tensor5<T>(s), Tensor5<T>(weights.shape()), {}};
    for (std::size_t n = 0; n < s.n; ++n) {
        parallel_for(g.in_ch, work, [&](std::size_t i) {
            T* dxp = r.dx.plane(n, i).data();
            for (std::size_t o = 0; o < g.out_ch; ++o) {
                const T* wts = weights.raw() + (o * g.in_ch + i) * kvol;
                accumulate_kernel_transpose(s, g.k, wts, dy.plane(n, o).data(), dxp);
            }
        });
    }
    std::vector<double> dw(weights.numel(), 0.0);
    parallel_for(g.out_ch, g.in_ch * work / std::max<std::size_t>(1, g.out_ch), [&](std::size_t o) {
        for (std::size_t n = 0; n < s.n; ++n) {
            for (std::size_t i = 0; i < g.in_ch; ++i) {
                accumulate_kernel_weight_grad(s, g.k, dy.plane(n, o).data(), x.plane(n, i).data(),
                                              dw.data() + (o * g.in_ch + i) * kvol);
            }
        }
    });
    for (std::size_t j = 0; j < dw.size(); ++j) r.dweight[j] = static_cast<T>(dw[j]);
    if (has_bias) r.dbias = bias_grad(dy);
    return r;
}

}  // namespace

template <typename T>
Tensor5<T> conv3d(const Tensor5<T>& x, const Tensor5<T>& weights, std::span<const T> bias) {
    return dense_conv(x, weights, bias, "conv3d");
}

template <typename T>
Tensor5<T> pointwise_conv3d(const Tensor5<T>& x, const Tensor5<T>& weights,
                            std::span<const T> bias) {
    if (weights.shape().d != 1) {
        throw ShapeError("pointwise_conv3d: kernel must be 1x1x1, got " + weights.shape().str());
    }
    return dense_conv(x, weights, bias, "pointwise_conv3d");
}

template <typename T>
ConvGrads<T> conv3d_vjp(const Tensor5<T>& x, const Tensor5<T>& weights, bool has_bias,
                        const Tensor5<T>& dy) {
    return dense_conv_vjp(x, weights, has_bias, dy, "conv3d");
}

template <typename T>
ConvGrads<T> pointwise_conv3d_vjp(const Tensor5<T>& x, const Tensor5<T>& weights, bool has_bias,
                                  const Tensor5<T>& dy) {
    if (weights.shape().d != 1) {
        throw ShapeError("pointwise_conv3d: kernel must be 1x1x1, got " + weights.shape().str());
    }
    return dense_conv_vjp(x, weights, has_bias, dy, "pointwise_conv3d");
}

template <typename T>
Tensor5<T> depthwise_conv3d(const Tensor5<T>& x, const Tensor5<T>& weights,
                            std::span<const T> bias) {
    const KernelGeom g = check_kernel(weights.shape(), "depthwise_conv3d");
    const Shape5& s = x.shape();
    if (g.in_ch != 1 || g.out_ch != s.c) {
        throw ShapeError("depthwise_conv3d: kernel " + weights.shape().str() +
                         " does not match input " + s.str());
    }
    check_bias(s.c, bias.size(), "depthwise_conv3d");
    Tensor5<T> out(s);
    const std::size_t kvol = g.k * g.k * g.k;
    for (std::size_t n = 0; n < s.n; ++n) {
        parallel_for(s.c, kvol * s.spatial(), [&](std::size_t c) {
            T* op = out.plane(n, c).data();
            if (!bias.empty()) std::fill_n(op, s.spatial(), bias[c]);
            accumulate_kernel(s, g.k, weights.raw() + c * kvol, x.plane(n, c).data(), op);
        });
    }
    return out;
}

template <typename T>
ConvGrads<T> depthwise_conv3d_vjp(const Tensor5<T>& x, const Tensor5<T>& weights, bool has_bias,
                                  const Tensor5<T>& dy) {
    const KernelGeom g = check_kernel(weights.shape(), "depthwise_conv3d");
    const Shape5& s = x.shape();
    if (g.in_ch != 1 || g.out_ch != s.c || !(dy.shape() == s)) {
        throw ShapeError("depthwise_conv3d vjp: context/gradient mismatch " + s.str() + " / " +
                         dy.shape().str());
    }
    const std::size_t kvol = g.k * g.k * g.k;
    ConvGrads<T> r{Tensor5<T>(s), Tensor5<T>(weights.shape()), {}};
    std::vector<double> dw(weights.numel(), 0.0);
    parallel_for(s.c, 2 * kvol * s.spatial() * s.n, [&](std::size_t c) {
        for (std::size_t n = 0; n < s.n; ++n) {
            accumulate_kernel_transpose(s, g.k, weights.raw() + c * kvol, dy.plane(n, c).data(),
                                        r.dx.plane(n, c).data());
            accumulate_kernel_weight_grad(s, g.k, dy.plane(n, c).data(), x.plane(n, c).data(),
                                          dw.data() + c * kvol);
        }
    });
    for (std::size_t j = 0; j < dw.size(); ++j) r.dweight[j] = static_cast<T>(dw[j]);
    if (has_bias) r.dbias = bias_grad(dy);
    return r;
}

std::size_t default_group_size(std::size_t channels, std::size_t preferred) {
    if (preferred > 0 && channels % preferred == 0) return preferred;
    return channels;
}

namespace {

void check_gn(const Shape5& s, std::size_t gamma_len, const GroupNormSpec& spec) {
    if (spec.group_size == 0 || s.c % spec.group_size != 0) {
        throw ShapeError("group_norm: " + std::to_string(s.c) + " channels not divisible by group size " +
                         std::to_string(spec.group_size));
    }
    if (!(spec.eps > 0.0)) throw std::invalid_argument("group_norm: eps must be positive");
    if (gamma_len != s.c) {
        throw ShapeError("group_norm: affine length " + std::to_string(gamma_len) + " != " +
                         std::to_string(s.c) + " channels");
    }
    if (spec.group_size * s.spatial() < 2) {
        throw ShapeError("group_norm: a group needs at least 2 elements, shape " + s.str());
    }
}

}  // namespace

template <typename T>
Tensor5<T> group_norm(const Tensor5<T>& x, std::span<const T> gamma, std::span<const T> beta,
                      const GroupNormSpec& spec, GroupNormStats<T>* stats) {
    const Shape5& s = x.shape();
    check_gn(s, gamma.size(), spec);
    if (beta.size() != s.c) throw ShapeError("group_norm: beta length mismatch");
    const std::size_t groups = s.c / spec.group_size;
    const std::size_t count = spec.group_size * s.spatial();
    Tensor5<T> out(s);
    if (stats) {
        stats->mean.assign(s.n * groups, T(0));
        stats->rstd.assign(s.n * groups, T(0));
    }
    for (std::size_t n = 0; n < s.n; ++n) {
        for (std::size_t g = 0; g < groups; ++g) {
            const T* src = x.raw() + x.offset(n, g * spec.group_size, 0, 0, 0);
            double sum = 0.0;
            for (std::size_t i = 0; i < count; ++i) sum += static_cast<double>(src[i]);
            const double mean = sum / static_cast<double>(count);
            double sq = 0.0;
            for (std::size_t i = 0; i < count; ++i) {
                const double dv = static_cast<double>(src[i]) - mean;
                sq += dv * dv;
            }
            const double var = sq / static_cast<double>(count);
            const T mean_t = static_cast<T>(mean);
            const T rstd_t = static_cast<T>(1.0 / std::sqrt(var + spec.eps));
            if (stats) {
                stats->mean[n * groups + g] = mean_t;
                stats->rstd[n * groups + g] = rstd_t;
            }
            for (std::size_t cc = 0; cc < spec.group_size; ++cc) {
                const std::size_t c = g * spec.group_size + cc;
                const T* xp = x.plane(n, c).data();
                T* op = out.plane(n, c).data();
                const T ga = gamma[c], be = beta[c];
                for (std::size_t i = 0; i < s.spatial(); ++i) {
                    op[i] = (xp[i] - mean_t) * rstd_t * ga + be;
                }
            }
        }
    }
    return out;
}

template <typename T>
GroupNormGrads<T> group_norm_vjp(const Tensor5<T>& x, std::span<const T> gamma,
                                 const GroupNormSpec& spec, const GroupNormStats<T>& stats,
                                 const Tensor5<T>& dy) {
    const Shape5& s = x.shape();
    check_gn(s, gamma.size(), spec);
    const std::size_t groups = s.c / spec.group_size;
    if (!(dy.shape() == s) || stats.mean.size() != s.n * groups || stats.rstd.size() != s.n * groups) {
        throw ShapeError("group_norm vjp: context/gradient mismatch");
    }
    const std::size_t sp = s.spatial();
    const double count = static_cast<double>(spec.group_size * sp);
    GroupNormGrads<T> r{Tensor5<T>(s), std::vector<T>(s.c), std::vector<T>(s.c)};
    std::vector<double> dgamma(s.c, 0.0), dbeta(s.c, 0.0);
    for (std::size_t n = 0; n < s.n; ++n) {
        for (std::size_t g = 0; g < groups; ++g) {
            const double mean = stats.mean[n * groups + g];
            const double rstd = stats.rstd[n * groups + g];
            double sum_g = 0.0, sum_gx = 0.0;
            for (std::size_t cc = 0; cc < spec.group_size; ++cc) {
                const std::size_t c = g * spec.group_size + cc;
                const T* xp = x.plane(n, c).data();
                const T* gp = dy.plane(n, c).data();
                const double ga = gamma[c];
                double dga = 0.0, dbe = 0.0;
                for (std::size_t i = 0; i < sp; ++i) {
                    const double xh = (static_cast<double>(xp[i]) - mean) * rstd;
                    const double gi = gp[i];
                    dga += gi * xh;
                    dbe += gi;
                    sum_g += gi * ga;
                    sum_gx += gi * ga * xh;
                }
                dgamma[c] += dga;
                dbeta[c] += dbe;
            }
            const double m1 = sum_g / count, m2 = sum_gx / count;
            for (std::size_t cc = 0; cc < spec.group_size; ++cc) {
                const std::size_t c = g * spec.group_size + cc;
                const T* xp = x.plane(n, c).data();
                const T* gp = dy.plane(n, c).data();
                T* dxp = r.dx.plane(n, c).data();
                const double ga = gamma[c];
                for (std::size_t i = 0; i < sp; ++i) {
                    const double xh = (static_cast<double>(xp[i]) - mean) * rstd;
                    dxp[i] = static_cast<T>(rstd * (gp[i] * ga - m1 - xh * m2));
                }
            }
        }
    }
    for (std::size_t c = 0; c < s.c; ++c) {
        r.dgamma[c] = static_cast<T>(dgamma[c]);
        r.dbeta[c] = static_cast<T>(dbeta[c]);
    }
    return r;
}

template <typename T>
Tensor5<T> relu(const Tensor5<T>& x, double cap) {
    Tensor5<T> out(x.shape());
    const T hi = static_cast<T>(cap);
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const T v = x[i] > T(0) ? x[i] : T(0);
        out[i] = v < hi ? v : hi;
    }
    return out;
}

template <typename T>
Tensor5<T> relu_vjp(const Tensor5<T>& output, const Tensor5<T>& dy, double cap) {
    if (!(output.shape() == dy.shape())) throw ShapeError("relu vjp: shape mismatch");
    Tensor5<T> dx(dy.shape());
    const T hi = static_cast<T>(cap);
    for (std::size_t i = 0; i < dy.numel(); ++i) {
        dx[i] = (output[i] > T(0) && output[i] < hi) ? dy[i] : T(0);
    }
    return dx;
}

template <typename T>
MaxPoolResult<T> maxpool3d(const Tensor5<T>& x) {
    const Shape5& s = x.shape();
    if (s.d % 2 || s.h % 2 || s.w % 2) {
        throw ShapeError("maxpool3d: spatial dims must be even, got " + s.str());
    }
    Shape5 os{s.n, s.c, s.d / 2, s.h / 2, s.w / 2};
    MaxPoolResult<T> r{Tensor5<T>(os), std::vector<std::uint32_t>(os.numel())};
    std::size_t out_idx = 0;
    for (std::size_t n = 0; n < s.n; ++n) {
        for (std::size_t c = 0; c < s.c; ++c) {
            const T* in = x.plane(n, c).data();
            for (std::size_t d = 0; d < os.d; ++d) {
                for (std::size_t h = 0; h < os.h; ++h) {
                    for (std::size_t w = 0; w < os.w; ++w, ++out_idx) {
                        std::size_t best = (2 * d * s.h + 2 * h) * s.w + 2 * w;
                        T best_v = in[best];
                        for (std::size_t a = 0; a < 2; ++a) {
                            for (std::size_t b = 0; b < 2; ++b) {
                                for (std::size_t e = 0; e < 2; ++e) {
                                    const std::size_t idx =
                                        ((2 * d + a) * s.h + (2 * h + b)) * s.w + (2 * w + e);
                                    if (in[idx] > best_v) {
                                        best_v = in[idx];
                                        best = idx;
                                    }
                                }
                            }
                        }
                        r.output[out_idx] = best_v;
                        r.argmax[out_idx] = static_cast<std::uint32_t>(best);
                    }
                }
            }
        }
    }
    return r;
}

template <typename T>
Tensor5<T> maxpool3d_vjp(const Shape5& input_shape, std::span<const std::uint32_t> argmax,
                         const Tensor5<T>& dy) {
    const Shape5& os = dy.shape();
    if (os.n != input_shape.n || os.c != input_shape.c || os.d * 2 != input_shape.d ||
        os.h * 2 != input_shape.h || os.w * 2 != input_shape.w || argmax.size() != os.numel()) {
        throw ShapeError("maxpool3d vjp: context/gradient mismatch");
    }
    Tensor5<T> dx(input_shape);
    const std::size_t per_plane = os.spatial();
    for (std::size_t p = 0; p < os.n * os.c; ++p) {
        T* dxp = dx.raw() + p * input_shape.spatial();
        for (std::size_t i = 0; i < per_plane; ++i) {
            dxp[argmax[p * per_plane + i]] += dy[p * per_plane + i];
        }
    }
    return dx;
}

namespace {

struct Tap {
    std::size_t i0, i1;
    double lambda;
};

// Source taps for output index o of a 2x upsample of a length-len axis.
Tap upsample_tap(std::size_t o, std::size_t len) {
    double src = (static_cast<double>(o) + 0.5) * 0.5 - 0.5;
    if (src < 0.0) src = 0.0;
    const auto i0 = static_cast<std::size_t>(src);
    const std::size_t i1 = std::min(i0 + 1, len - 1);
    return {i0, i1, src - static_cast<double>(i0)};
}

// View a buffer as [outer, len, inner] and upsample the middle axis.
template <typename T>
std::vector<T> upsample_axis(const std::vector<T>& in, std::size_t outer, std::size_t len,
                             std::size_t inner) {
    std::vector<T> out(outer * 2 * len * inner);
    for (std::size_t o = 0; o < 2 * len; ++o) {
        const Tap t = upsample_tap(o, len);
        const T lam = static_cast<T>(t.lambda);
        for (std::size_t u = 0; u < outer; ++u) {
            const T* a = in.data() + (u * len + t.i0) * inner;
            const T* b = in.data() + (u * len + t.i1) * inner;
            T* dst = out.data() + (u * 2 * len + o) * inner;
            for (std::size_t v = 0; v < inner; ++v) dst[v] = a[v] + lam * (b[v] - a[v]);
        }
    }
    return out;
}

template <typename T>
std::vector<T> upsample_axis_transpose(const std::vector<T>& g, std::size_t outer, std::size_t len,
                                       std::size_t inner) {
    std::vector<T> out(outer * len * inner, T(0));
    for (std::size_t o = 0; o < 2 * len; ++o) {
        const Tap t = upsample_tap(o, len);
        const T lam = static_cast<T>(t.lambda);
        const T keep = static_cast<T>(1.0 - t.lambda);
        for (std::size_t u = 0; u < outer; ++u) {
            const T* src = g.data() + (u * 2 * len + o) * inner;
            T* a = out.data() + (u * len + t.i0) * inner;
            T* b = out.data() + (u * len + t.i1) * inner;
            for (std::size_t v = 0; v < inner; ++v) {
                a[v] += keep * src[v];
                b[v] += lam * src[v];
            }
        }
    }
    return out;
}

}  // namespace

template <typename T>
Tensor5<T> trilinear_upsample(const Tensor5<T>& x) {
    const Shape5& s = x.shape();
    const std::size_t nc = s.n * s.c;
    std::vector<T> buf(x.data().begin(), x.data().end());
    buf = upsample_axis(buf, nc * s.d * s.h, s.w, 1);
    buf = upsample_axis(buf, nc * s.d, s.h, 2 * s.w);
    buf = upsample_axis(buf, nc, s.d, 4 * s.h * s.w);
    return Tensor5<T>(Shape5{s.n, s.c, 2 * s.d, 2 * s.h, 2 * s.w}, std::move(buf));
}

template <typename T>
Tensor5<T> trilinear_upsample_vjp(const Shape5& s, const Tensor5<T>& dy) {
    if (!(dy.shape() == Shape5{s.n, s.c, 2 * s.d, 2 * s.h, 2 * s.w})) {
        throw ShapeError("trilinear_upsample vjp: gradient " + dy.shape().str() +
                         " does not match input " + s.str());
    }
    const std::size_t nc = s.n * s.c;
    std::vector<T> buf(dy.data().begin(), dy.data().end());
    buf = upsample_axis_transpose(buf, nc, s.d, 4 * s.h * s.w);
    buf = upsample_axis_transpose(buf, nc * s.d, s.h, 2 * s.w);
    buf = upsample_axis_transpose(buf, nc * s.d * s.h, s.w, 1);
    return Tensor5<T>(s, std::move(buf));
}

#define REVUNET_INSTANTIATE(T)                                                                 \
    template Tensor5<T> conv3d(const Tensor5<T>&, const Tensor5<T>&, std::span<const T>);     \
    template Tensor5<T> pointwise_conv3d(const Tensor5<T>&, const Tensor5<T>&,                \
                                         std::span<const T>);                                  \
    template Tensor5<T> depthwise_conv3d(const Tensor5<T>&, const Tensor5<T>&,                \
                                         std::span<const T>);                                  \
    template ConvGrads<T> conv3d_vjp(const Tensor5<T>&, const Tensor5<T>&, bool,               \
                                     const Tensor5<T>&);                                       \
    template ConvGrads<T> pointwise_conv3d_vjp(const Tensor5<T>&, const Tensor5<T>&, bool,     \
                                               const Tensor5<T>&);                             \
    template ConvGrads<T> depthwise_conv3d_vjp(const Tensor5<T>&, const Tensor5<T>&, bool,     \
                                               const Tensor5<T>&);                             \
    template Tensor5<T> group_norm(const Tensor5<T>&, std::span<const T>, std::span<const T>, \
                                   const GroupNormSpec&, GroupNormStats<T>*);                  \
    template GroupNormGrads<T> group_norm_vjp(const Tensor5<T>&, std::span<const T>,           \
                                              const GroupNormSpec&, const GroupNormStats<T>&,  \
                                              const Tensor5<T>&);                              \
    template Tensor5<T> relu(const Tensor5<T>&, double);                                       \
    template Tensor5<T> relu_vjp(const Tensor5<T>&, const Tensor5<T>&, double);                \
    template MaxPoolResult<T> maxpool3d(const Tensor5<T>&);                                    \
    template Tensor5<T> maxpool3d_vjp(const Shape5&, std::span<const std::uint32_t>,           \
                                      const Tensor5<T>&);                                      \
    template Tensor5<T> trilinear_upsample(const Tensor5<T>&);                                 \
    template Tensor5<T> trilinear_upsample_vjp(const Shape5&, const Tensor5<T>&);

REVUNET_INSTANTIATE(float)
REVUNET_INSTANTIATE(double)
#undef REVUNET_INSTANTIATE

}  // namespace revunet
