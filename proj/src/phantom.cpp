// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include "revunet/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "revunet/rng.hpp"
#include "revunet/tensor_io.hpp"

namespace revunet {

namespace {

// Mean intensity per channel for: air, healthy tissue, labels 1..3.
constexpr double kProfile[5][kPhantomChannels] = {
    {0.00, 0.00, 0.00, 0.00},
    {0.45, 0.40, 0.35, 0.30},
    {0.40, 0.40, 0.75, 0.85},
    {0.55, 0.85, 0.60, 0.65},
    {0.20, 0.30, 0.90, 0.55},
};

struct Ellipsoid {
    std::array<double, 3> center{};
    std::array<double, 3> radius{};

    bool contains(double d, double h, double w) const {
        const double a = (d - center[0]) / radius[0];
        const double b = (h - center[1]) / radius[1];
        const double c = (w - center[2]) / radius[2];
        return a * a + b * b + c * c <= 1.0;
    }
};

}  // namespace

Phantom make_phantom(std::uint64_t seed, std::array<std::size_t, 3> size, const PhantomOptions& opt) {
    for (auto e : size) {
        if (e < kMinPhantomExtent) {
            throw std::invalid_argument("phantom extent " + std::to_string(e) + " is below the minimum of " +
                                        std::to_string(kMinPhantomExtent));
        }
    }
    Rng geo(derive_seed(seed, "phantom.geometry"));
    Ellipsoid head, lesion;
    for (std::size_t a = 0; a < 3; ++a) {
        const double ext = static_cast<double>(size[a]);
        const double mid = (ext - 1.0) / 2.0;
        head.center[a] = mid;
        head.radius[a] = 0.47 * ext;
        lesion.center[a] = mid + geo.uniform(-0.1, 0.1) * ext;
        lesion.radius[a] = geo.uniform(opt.min_radius, opt.max_radius) * ext;
    }
    Ellipsoid middle = lesion, core = lesion;
    // Each inner shell stays at least one voxel inside the shell around it so
    // that nesting survives the lattice at the smallest extents.
    for (std::size_t a = 0; a < 3; ++a) {
        middle.radius[a] = std::min(lesion.radius[a] * opt.middle_scale, lesion.radius[a] - 1.0);
        core.radius[a] = std::min(lesion.radius[a] * opt.core_scale, middle.radius[a] - 1.0);
    }
    std::array<double, kPhantomChannels> gain{};
    for (auto& g : gain) g = geo.uniform(0.95, 1.05);

    Rng noise(derive_seed(seed, "phantom.noise"));
    Phantom p;
    p.labels = LabelMap(size);
    p.volume = Tensor5f(Shape5{1, kPhantomChannels, size[0], size[1], size[2]});
    for (std::size_t d = 0; d < size[0]; ++d) {
        for (std::size_t h = 0; h < size[1]; ++h) {
            for (std::size_t w = 0; w < size[2]; ++w) {
                const double fd = static_cast<double>(d), fh = static_cast<double>(h), fw = static_cast<double>(w);
                int tissue = 0;
                std::uint8_t label = 0;
                if (head.contains(fd, fh, fw)) {
                    tissue = 1;
                    if (lesion.contains(fd, fh, fw)) {
                        label = 1;
                        if (middle.contains(fd, fh, fw)) {
                            label = 2;
                            if (core.contains(fd, fh, fw)) label = 3;
                        }
                        tissue = 1 + label;
                    }
                }
                p.labels.at(d, h, w) = label;
                for (std::size_t c = 0; c < kPhantomChannels; ++c) {
                    double v = 0.0;
                    if (tissue > 0) {
                        v = kProfile[tissue][c] * gain[c] + opt.noise_std * noise.normal();
                        v = std::clamp(v, 1e-3, 1.0);
                    }
                    p.volume(0, c, d, h, w) = static_cast<float>(v);
                }
            }
        }
    }
    return p;
}

bool labels_nested(const LabelMap& l, std::size_t num_classes) {
    const auto [D, H, W] = l.dims;
    for (std::size_t d = 0; d < D; ++d)
        for (std::size_t h = 0; h < H; ++h)
            for (std::size_t w = 0; w < W; ++w) {
                const auto v = l.at(d, h, w);
                if (v >= num_classes) return false;
                if (v < 2) continue;
                const long nb[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
                for (const auto& o : nb) {
                    const long nd = static_cast<long>(d) + o[0], nh = static_cast<long>(h) + o[1],
                               nw = static_cast<long>(w) + o[2];
                    if (nd < 0 || nh < 0 || nw < 0 || nd >= static_cast<long>(D) || nh >= static_cast<long>(H) ||
                        nw >= static_cast<long>(W)) {
                        return false;
                    }
                    if (l.at(static_cast<std::size_t>(nd), static_cast<std::size_t>(nh), static_cast<std::size_t>(nw)) == 0) {
                        return false;
                    }
                }
            }
    return true;
}

std::vector<double> class_fractions(const LabelMap& l, std::size_t num_classes) {
    std::vector<double> f(num_classes, 0.0);
    for (auto v : l.data) {
        if (v < num_classes) f[v] += 1.0;
    }
    for (auto& x : f) x /= static_cast<double>(l.size());
    return f;
}

namespace {
std::string stem(std::size_t i) {
    std::ostringstream os;
    os << "phantom_" << std::setw(4) << std::setfill('0') << i;
    return os.str();
}
}  // namespace

void write_corpus(const std::vector<Phantom>& phantoms, const std::vector<std::uint64_t>& seeds,
                  const std::filesystem::path& dir) {
    if (phantoms.size() != seeds.size()) throw std::invalid_argument("one seed per phantom required");
    std::filesystem::create_directories(dir);
    nlohmann::json idx;
    idx["schema_version"] = 1;
    idx["items"] = nlohmann::json::array();
    for (std::size_t i = 0; i < phantoms.size(); ++i) {
        const std::string s = stem(i);
        tensor_write(phantoms[i].volume, dir / (s + "_volume.rvt"));
        tensor_write(labels_to_tensor<float>(phantoms[i].labels), dir / (s + "_labels.rvt"));
        idx["items"].push_back({{"seed", seeds[i]},
                                {"size", phantoms[i].labels.dims},
                                {"volume", s + "_volume.rvt"},
                                {"labels", s + "_labels.rvt"}});
    }
    std::ofstream out(dir / "index.json");
    out << idx.dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing corpus index in " + dir.string());
}

std::vector<Phantom> read_corpus(const std::filesystem::path& dir) {
    std::ifstream in(dir / "index.json");
    if (!in) throw std::runtime_error("missing index.json in " + dir.string());
    nlohmann::json idx;
    in >> idx;
    std::vector<Phantom> out;
    for (const auto& item : idx.at("items")) {
        Phantom p;
        p.volume = tensor_read<float>(dir / item.at("volume").get<std::string>());
        p.labels = labels_from_tensor(tensor_read<float>(dir / item.at("labels").get<std::string>()));
        const Shape5& s = p.volume.shape();
        if (s.n != 1 || p.labels.dims != std::array<std::size_t, 3>{s.d, s.h, s.w}) {
            throw ShapeError("volume/label shape mismatch in corpus item " + item.at("volume").get<std::string>());
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace revunet
