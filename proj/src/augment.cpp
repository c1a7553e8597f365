// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include "revunet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "revunet/rng.hpp"

namespace revunet {

bool AugmentParams::within(const AugmentBounds& b) const {
    return std::abs(rotation_deg) <= b.max_rotation_deg && std::abs(scale - 1.0) <= b.max_scale_delta &&
           std::abs(intensity - 1.0) <= b.max_intensity_delta && elastic_alpha >= 0.0 &&
           elastic_alpha <= b.elastic_alpha && elastic_sigma > 0.0;
}

AugmentParams sample_augment_params(std::uint64_t seed, const AugmentBounds& b) {
    Rng rng(derive_seed(seed, "augment.params"));
    AugmentParams p;
    p.rotation_deg = rng.uniform(-b.max_rotation_deg, b.max_rotation_deg);
    p.scale = rng.uniform(1.0 - b.max_scale_delta, 1.0 + b.max_scale_delta);
    for (auto& f : p.flip) f = rng.bernoulli(b.flip_probability);
    p.intensity = rng.uniform(1.0 - b.max_intensity_delta, 1.0 + b.max_intensity_delta);
    p.elastic_alpha = b.elastic_alpha;
    p.elastic_sigma = b.elastic_sigma;
    return p;
}

nlohmann::json to_json(const AugmentParams& p) {
    return {{"schema_version", 1},
            {"rotation_deg", p.rotation_deg},
            {"scale", p.scale},
            {"flip", p.flip},
            {"intensity", p.intensity},
            {"elastic_alpha", p.elastic_alpha},
            {"elastic_sigma", p.elastic_sigma}};
}

AugmentParams augment_params_from_json(const nlohmann::json& j) {
    AugmentParams p;
    p.rotation_deg = j.at("rotation_deg").get<double>();
    p.scale = j.at("scale").get<double>();
    p.flip = j.at("flip").get<std::array<bool, 3>>();
    p.intensity = j.at("intensity").get<double>();
    p.elastic_alpha = j.at("elastic_alpha").get<double>();
    p.elastic_sigma = j.at("elastic_sigma").get<double>();
    return p;
}

namespace {

using Dims = std::array<std::size_t, 3>;

std::array<double, 3> centre(const Dims& dims) {
    return {(static_cast<double>(dims[0]) - 1.0) / 2.0, (static_cast<double>(dims[1]) - 1.0) / 2.0,
            (static_cast<double>(dims[2]) - 1.0) / 2.0};
}

// Source position in the rotated frame, for an output position q.
std::array<double, 3> unrotate(std::array<double, 3> q, const std::array<double, 3>& c, double cs, double sn) {
    const double dh = q[1] - c[1];
    const double dw = q[2] - c[2];
    return {q[0], c[1] + cs * dh + sn * dw, c[2] - sn * dh + cs * dw};
}

void gaussian_smooth_axis(std::vector<double>& f, const Dims& dims, std::size_t axis, double sigma) {
    const long radius = static_cast<long>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (long i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (auto& v : k) v /= sum;
    const std::size_t stride[3] = {dims[1] * dims[2], dims[2], 1};
    const long len = static_cast<long>(dims[axis]);
    std::vector<double> line(static_cast<std::size_t>(len)), out(static_cast<std::size_t>(len));
    const std::size_t total = dims[0] * dims[1] * dims[2];
    for (std::size_t base = 0; base < total; ++base) {
        if ((base / stride[axis]) % dims[axis] != 0) continue;  // visit each line once, from its start
        for (long i = 0; i < len; ++i) line[static_cast<std::size_t>(i)] = f[base + static_cast<std::size_t>(i) * stride[axis]];
        for (long i = 0; i < len; ++i) {
            double acc = 0.0;
            for (long t = -radius; t <= radius; ++t) {
                long j = i + t;
                // Mirror at the borders.
                while (j < 0 || j >= len) j = j < 0 ? -j - 1 : 2 * len - j - 1;
                acc += k[static_cast<std::size_t>(t + radius)] * line[static_cast<std::size_t>(j)];
            }
            out[static_cast<std::size_t>(i)] = acc;
        }
        for (long i = 0; i < len; ++i) f[base + static_cast<std::size_t>(i) * stride[axis]] = out[static_cast<std::size_t>(i)];
    }
}

// Three smoothed uniform(-1, 1) fields, each rescaled to peak magnitude alpha.
std::array<std::vector<double>, 3> elastic_field(const Dims& dims, double alpha, double sigma, std::uint64_t seed) {
    std::array<std::vector<double>, 3> field;
    const std::size_t total = dims[0] * dims[1] * dims[2];
    for (std::size_t comp = 0; comp < 3; ++comp) {
        Rng rng(derive_seed(seed, "augment.elastic", comp));
        auto& f = field[comp];
        f.resize(total);
        for (auto& v : f) v = rng.uniform(-1.0, 1.0);
        for (std::size_t axis = 0; axis < 3; ++axis) gaussian_smooth_axis(f, dims, axis, sigma);
        double peak = 0.0;
        for (double v : f) peak = std::max(peak, std::abs(v));
        const double s = peak > 0.0 ? alpha / peak : 0.0;
        for (auto& v : f) v *= s;
    }
    return field;
}

double lerp(double a, double b, double t) { return a + t * (b - a); }

}  // namespace

SourceMap rotation_map(Dims dims, double degrees) {
    const double rad = degrees * std::numbers::pi / 180.0;
    const double cs = std::cos(rad), sn = std::sin(rad);
    const auto c = centre(dims);
    return [=](std::size_t d, std::size_t h, std::size_t w) {
        return unrotate({static_cast<double>(d), static_cast<double>(h), static_cast<double>(w)}, c, cs, sn);
    };
}

Tensor5f resample_trilinear(const Tensor5f& v, const SourceMap& map) {
    const Shape5& s = v.shape();
    const long D = static_cast<long>(s.d), H = static_cast<long>(s.h), W = static_cast<long>(s.w);
    Tensor5f out(s);
    for (std::size_t d = 0; d < s.d; ++d)
        for (std::size_t h = 0; h < s.h; ++h)
            for (std::size_t w = 0; w < s.w; ++w) {
                const auto src = map(d, h, w);
                const double fd = std::floor(src[0]), fh = std::floor(src[1]), fw = std::floor(src[2]);
                const long d0 = static_cast<long>(fd), h0 = static_cast<long>(fh), w0 = static_cast<long>(fw);
                const double td = src[0] - fd, th = src[1] - fh, tw = src[2] - fw;
                for (std::size_t n = 0; n < s.n; ++n)
                    for (std::size_t c = 0; c < s.c; ++c) {
                        auto at = [&](long dd, long hh, long ww) -> double {
                            if (dd < 0 || hh < 0 || ww < 0 || dd >= D || hh >= H || ww >= W) return 0.0;
                            return v(n, c, static_cast<std::size_t>(dd), static_cast<std::size_t>(hh),
                                     static_cast<std::size_t>(ww));
                        };
                        double plane[2];
                        for (int i = 0; i < 2; ++i) {
                            const double r0 = lerp(at(d0 + i, h0, w0), at(d0 + i, h0, w0 + 1), tw);
                            const double r1 = lerp(at(d0 + i, h0 + 1, w0), at(d0 + i, h0 + 1, w0 + 1), tw);
                            plane[i] = lerp(r0, r1, th);
                        }
                        out(n, c, d, h, w) = static_cast<float>(lerp(plane[0], plane[1], td));
                    }
            }
    return out;
}

LabelMap resample_nearest(const LabelMap& l, const SourceMap& map) {
    LabelMap out(l.dims);
    for (std::size_t d = 0; d < l.dims[0]; ++d)
        for (std::size_t h = 0; h < l.dims[1]; ++h)
            for (std::size_t w = 0; w < l.dims[2]; ++w) {
                const auto src = map(d, h, w);
                std::array<long, 3> idx{};
                bool inside = true;
                for (std::size_t a = 0; a < 3; ++a) {
                    idx[a] = static_cast<long>(std::floor(src[a] + 0.5));
                    if (idx[a] < 0 || idx[a] >= static_cast<long>(l.dims[a])) inside = false;
                }
                out.at(d, h, w) = inside ? l.at(static_cast<std::size_t>(idx[0]), static_cast<std::size_t>(idx[1]),
                                                static_cast<std::size_t>(idx[2]))
                                         : std::uint8_t{0};
            }
    return out;
}

Phantom augment(const Phantom& p, const AugmentParams& prm, std::uint64_t seed) {
    const Dims dims = p.labels.dims;
    const Shape5& vs = p.volume.shape();
    if (vs.d != dims[0] || vs.h != dims[1] || vs.w != dims[2]) throw ShapeError("phantom volume and labels disagree");
    if (!(prm.scale > 0.0)) throw std::invalid_argument("augmentation scale must be positive");

    std::array<std::vector<double>, 3> field;
    const bool elastic = prm.elastic_alpha > 0.0;
    if (elastic) field = elastic_field(dims, prm.elastic_alpha, prm.elastic_sigma, seed);

    const auto c = centre(dims);
    const double rad = prm.rotation_deg * std::numbers::pi / 180.0;
    const double cs = std::cos(rad), sn = std::sin(rad);
    SourceMap map = [&](std::size_t d, std::size_t h, std::size_t w) {
        std::array<double, 3> q{static_cast<double>(d), static_cast<double>(h), static_cast<double>(w)};
        if (elastic) {
            const std::size_t i = (d * dims[1] + h) * dims[2] + w;
            for (std::size_t a = 0; a < 3; ++a) q[a] += field[a][i];
        }
        for (std::size_t a = 0; a < 3; ++a) {
            if (prm.flip[a]) q[a] = static_cast<double>(dims[a] - 1) - q[a];
        }
        if (prm.scale != 1.0) {
            for (std::size_t a = 0; a < 3; ++a) q[a] = c[a] + (q[a] - c[a]) / prm.scale;
        }
        if (prm.rotation_deg != 0.0) q = unrotate(q, c, cs, sn);
        return q;
    };

    Phantom out;
    out.volume = resample_trilinear(p.volume, map);
    out.labels = resample_nearest(p.labels, map);
    const float k = static_cast<float>(prm.intensity);
    for (auto& v : out.volume.data()) v = std::clamp(v * k, 0.0f, 1.0f);
    return out;
}

}  // namespace revunet
