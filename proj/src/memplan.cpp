// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include "revunet/memplan.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "revunet/blocks.hpp"

namespace revunet {

namespace {

struct Planner {
    const UNetConfig& cfg;
    Strategy strategy;
    std::vector<LedgerEntry> entries;

    std::size_t groups(std::size_t c) const { return c / default_group_size(c, cfg.group_size); }

    void add(const std::string& node, const char* op, std::size_t elements, StorageTag tag = StorageTag::store_all) {
        if (elements > 0) entries.push_back({node, op, elements, tag});
    }

    // Entries of one block on width c over V voxels; appended to out.
    void block(std::vector<LedgerEntry>& out, BlockKind kind, const std::string& prefix, std::size_t c,
               std::size_t t, std::size_t V) const {
        auto put = [&](const std::string& name, const char* op, std::size_t n) {
            out.push_back({join_id(prefix, name), op, n, StorageTag::store_all});
        };
        const char* pw = op_kind_name(OpKind::pointwise);
        const char* gn = op_kind_name(OpKind::group_norm);
        const char* relu = op_kind_name(OpKind::relu);
        if (kind == BlockKind::mbconv) {
            const std::size_t e = t * c;
            put("expand", pw, c * V);
            put("expand_gn", gn, e * V + 2 * groups(e));
            put("expand_relu", relu, e * V);
            put("depthwise", op_kind_name(OpKind::depthwise), e * V);
            put("depthwise_gn", gn, e * V + 2 * groups(e));
            put("depthwise_relu", relu, e * V);
            put("project", pw, e * V);
            put("project_gn", gn, c * V + 2 * groups(c));
        } else {
            put("conv", op_kind_name(OpKind::conv3d), c * V);
            put("gn", gn, c * V + 2 * groups(c));
            put("relu", relu, c * V);
        }
    }
};

std::size_t sum_elements(const std::vector<LedgerEntry>& v) {
    std::size_t s = 0;
    for (const auto& e : v) s += e.elements;
    return s;
}

std::string stage_of(const std::string& node) {
    if (node.rfind("enc", 0) == 0) return "encoder." + node.substr(3, node.find('.') - 3);
    if (node.rfind("dec", 0) == 0) return "decoder." + node.substr(3, node.find('.') - 3);
    return "head";
}

}  // namespace

MemoryEstimate estimate(const UNetConfig& cfg, Strategy strategy, Precision precision) {
    validate(cfg);
    Planner pl{cfg, strategy, {}};
    const std::size_t L = cfg.levels();
    std::vector<std::size_t> vox(L);
    for (std::size_t i = 0; i < L; ++i) {
        vox[i] = (cfg.image_size[0] >> i) * (cfg.image_size[1] >> i) * (cfg.image_size[2] >> i);
    }
    std::size_t peak_extra = 0;  // reversible backward transient, above the prefix
    for (std::size_t i = 0; i < L; ++i) {
        const std::string lv = "enc" + std::to_string(i);
        const std::size_t V = vox[i];
        if (i > 0) pl.add(lv + ".pool", op_kind_name(OpKind::maxpool), cfg.widths[i - 1] * V);
        const std::size_t in = i == 0 ? cfg.in_ch : cfg.widths[i - 1];
        pl.add(lv + ".raise", op_kind_name(OpKind::pointwise), in * V);

        const std::size_t half = cfg.widths[i] / 2;
        std::vector<LedgerEntry> f, g;
        pl.block(f, cfg.block_kind, lv + ".rev.F", half, cfg.expand_ratio, V);
        pl.block(g, cfg.block_kind, lv + ".rev.G", half, cfg.expand_ratio, V);
        if (strategy == Strategy::store_all) {
            pl.entries.insert(pl.entries.end(), f.begin(), f.end());
            pl.entries.insert(pl.entries.end(), g.begin(), g.end());
        } else {
            pl.add(lv + ".rev", "rev_block", cfg.widths[i] * V, StorageTag::reversible);
            const std::size_t prefix = sum_elements(pl.entries);
            const std::size_t transient = std::max(sum_elements(f), sum_elements(g));
            peak_extra = std::max(peak_extra, prefix + transient);
        }
    }
    for (std::size_t k = L - 1; k-- > 0;) {
        const std::string lv = "dec" + std::to_string(k);
        pl.add(lv + ".reduce", op_kind_name(OpKind::pointwise), cfg.widths[k + 1] * vox[k]);
        std::vector<LedgerEntry> b;
        pl.block(b, BlockKind::standard, lv + ".block", cfg.widths[k], 1, vox[k]);
        pl.entries.insert(pl.entries.end(), b.begin(), b.end());
    }
    pl.add("head", op_kind_name(OpKind::pointwise), cfg.widths[0] * vox[0]);

    MemoryEstimate est;
    est.config = cfg;
    est.strategy = strategy;
    est.scalar_bytes = precision_bytes(precision);
    est.entries = std::move(pl.entries);
    est.retained_elements = sum_elements(est.entries);
    est.peak_elements = std::max(est.retained_elements, peak_extra);
    for (const auto& e : est.entries) est.stage_elements[stage_of(e.node)] += e.elements;
    est.param_count = model_param_count(cfg);
    return est;
}

std::size_t model_param_count(const UNetConfig& cfg) {
    std::size_t n = 0;
    const std::size_t L = cfg.levels();
    for (std::size_t i = 0; i < L; ++i) {
        const std::size_t in = i == 0 ? cfg.in_ch : cfg.widths[i - 1];
        const std::size_t w = cfg.widths[i];
        n += in * w + w;
        const std::size_t half = w / 2;
        n += 2 * (cfg.block_kind == BlockKind::mbconv ? mbconv_param_count(half, cfg.expand_ratio)
                                                      : standard_block_param_count(half));
    }
    for (std::size_t k = 0; k + 1 < L; ++k) {
        n += cfg.widths[k + 1] * cfg.widths[k] + cfg.widths[k];
        n += standard_block_param_count(cfg.widths[k]);
    }
    n += cfg.widths[0] * cfg.num_classes + cfg.num_classes;
    return n;
}

nlohmann::json to_json(const MemoryEstimate& e) {
    LedgerReport r{e.entries, e.retained_elements, e.peak_elements, e.scalar_bytes};
    nlohmann::json j = to_json(r);
    j["config"] = to_json(e.config);
    j["strategy"] = strategy_name(e.strategy);
    j["stages"] = e.stage_elements;
    j["param_count"] = e.param_count;
    j["param_bytes"] = e.param_bytes();
    j["peak_plus_params_bytes"] = e.peak_bytes() + e.param_bytes();
    return j;
}

const char* axis_name(Axis a) {
    switch (a) {
        case Axis::volume: return "volume";
        case Axis::depth: return "depth";
        case Axis::channels: return "channels";
    }
    return "?";
}

Axis parse_axis(const std::string& s) {
    if (s == "volume") return Axis::volume;
    if (s == "depth") return Axis::depth;
    if (s == "channels") return Axis::channels;
    throw std::invalid_argument("unknown axis '" + s + "' (expected volume, depth or channels)");
}

UNetConfig scale_channels(const UNetConfig& base, double m) {
    UNetConfig c = base;
    std::size_t prev = 0;
    for (auto& w : c.widths) {
        std::size_t s = 2 * static_cast<std::size_t>(std::llround(static_cast<double>(w) * m / 2.0));
        s = std::max<std::size_t>({s, 2, prev + 2});
        w = prev = s;
    }
    return c;
}

UNetConfig scale_depth(const UNetConfig& base, std::size_t levels) {
    if (levels < base.levels()) throw std::invalid_argument("scale_depth cannot remove levels");
    UNetConfig c = base;
    while (c.widths.size() < levels) c.widths.push_back(2 * c.widths.back());
    const std::size_t g = c.grid();
    for (auto& e : c.image_size) e = (e + g - 1) / g * g;
    return c;
}

UNetConfig volume_rod(const UNetConfig& base, std::size_t cells) {
    UNetConfig c = base;
    const std::size_t g = base.grid();
    c.image_size = {g, g, g * cells};
    return c;
}

namespace {

std::size_t fits(const UNetConfig& c, Strategy s, Precision p, std::size_t budget, std::size_t* bytes) {
    const auto e = estimate(c, s, p);
    if (bytes) *bytes = e.peak_bytes();
    return e.peak_bytes() <= budget;
}

}  // namespace

BudgetResult budget_search(const UNetConfig& base, std::size_t budget, Axis axis, Strategy strategy,
                           Precision precision) {
    std::size_t base_bytes = 0;
    if (!fits(base, strategy, precision, budget, &base_bytes)) {
        throw ConfigError("base config needs " + std::to_string(base_bytes) + " bytes, over the budget of " +
                          std::to_string(budget));
    }
    BudgetResult r;
    r.axis = axis;
    r.strategy = strategy;
    r.budget_bytes = budget;
    r.config = base;
    r.peak_bytes = base_bytes;
    r.levels = base.levels();
    const double base_vox = static_cast<double>(base.image_size[0] * base.image_size[1] * base.image_size[2]);

    switch (axis) {
        case Axis::volume: {
            const std::size_t g = base.grid();
            const std::size_t cell = g * g * g;
            // Memory is affine in the cell count; gallop to an infeasible bound, then bisect.
            std::size_t lo = 1, hi = 1;
            std::size_t b = 0;
            if (!fits(volume_rod(base, 1), strategy, precision, budget, &b)) break;
            while (fits(volume_rod(base, hi * 2), strategy, precision, budget, nullptr)) {
                hi *= 2;
                if (hi > (std::size_t{1} << 40)) throw std::overflow_error("volume search diverged");
            }
            lo = hi;
            hi *= 2;
            while (hi - lo > 1) {
                const std::size_t mid = lo + (hi - lo) / 2;
                (fits(volume_rod(base, mid), strategy, precision, budget, nullptr) ? lo : hi) = mid;
            }
            const UNetConfig c = volume_rod(base, lo);
            if (static_cast<double>(lo * cell) >= base_vox) {
                r.config = c;
                fits(c, strategy, precision, budget, &r.peak_bytes);
                r.scale = static_cast<double>(lo * cell) / base_vox;
            }
            break;
        }
        case Axis::channels: {
            // Several multipliers round to the same even widths; the reported
            // scale is the smallest one that yields the chosen widths.
            std::size_t j = 100, first = 100;
            while (j < 100000) {
                std::size_t b = 0;
                const UNetConfig c = scale_channels(base, static_cast<double>(j + 1) / 100.0);
                if (!fits(c, strategy, precision, budget, &b)) break;
                ++j;
                if (c.widths != r.config.widths) first = j;
                r.config = c;
                r.peak_bytes = b;
            }
            r.scale = static_cast<double>(first) / 100.0;
            break;
        }
        case Axis::depth: {
            std::size_t L = base.levels();
            const std::size_t max_levels = 16;
            while (L < max_levels) {
                std::size_t b = 0;
                const UNetConfig c = scale_depth(base, L + 1);
                if (!fits(c, strategy, precision, budget, &b)) break;
                ++L;
                r.config = c;
                r.peak_bytes = b;
            }
            r.levels = L;
            r.scale = static_cast<double>(L) / static_cast<double>(base.levels());
            break;
        }
    }
    return r;
}

std::size_t parse_budget(const std::string& s) {
    std::size_t pos = 0;
    double value = 0.0;
    try {
        value = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("budget '" + s + "' is not a number with an optional unit");
    }
    std::string unit = s.substr(pos);
    while (!unit.empty() && std::isspace(static_cast<unsigned char>(unit.front()))) unit.erase(unit.begin());
    for (auto& ch : unit) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    double mult = 0.0;
    if (unit.empty() || unit == "b") mult = 1.0;
    else if (unit == "k" || unit == "kb") mult = 1e3;
    else if (unit == "m" || unit == "mb") mult = 1e6;
    else if (unit == "g" || unit == "gb") mult = 1e9;
    else if (unit == "t" || unit == "tb") mult = 1e12;
    else if (unit == "kib") mult = 1024.0;
    else if (unit == "mib") mult = 1024.0 * 1024.0;
    else if (unit == "gib") mult = 1024.0 * 1024.0 * 1024.0;
    else throw std::invalid_argument("unknown budget unit '" + s.substr(pos) + "'");
    if (!(value > 0.0) || !std::isfinite(value)) throw std::invalid_argument("budget must be positive");
    return static_cast<std::size_t>(std::floor(value * mult));
}

nlohmann::json claims_report(const UNetConfig& cfg, Precision precision) {
    const MemoryEstimate sa = estimate(cfg, Strategy::store_all, precision);
    const MemoryEstimate rv = estimate(cfg, Strategy::reversible, precision);
    const std::size_t budget = sa.peak_bytes();
    nlohmann::json j;
    j["config"] = cfg.name;
    j["budget_bytes"] = budget;
    j["budget_rule"] = "store-all peak activation bytes of the unmodified config";
    j["store_all_peak_bytes"] = sa.peak_bytes();
    j["reversible_peak_bytes"] = rv.peak_bytes();
    j["activation_ratio"] = static_cast<double>(sa.peak_elements) / static_cast<double>(rv.peak_elements);
    j["param_bytes"] = sa.param_bytes();
    // Two readings of the 14 GB device figure: activations alone, or
    // activations plus one copy of the parameters.
    const std::size_t device = parse_budget("14GB");
    for (const auto* e : {&sa, &rv}) {
        j["fits_14GB"][strategy_name(e->strategy)] = {
            {"activations_only", e->peak_bytes() <= device},
            {"activations_plus_params", e->peak_bytes() + e->param_bytes() <= device}};
    }
    for (Axis a : {Axis::volume, Axis::channels, Axis::depth}) {
        const BudgetResult s = budget_search(cfg, budget, a, Strategy::store_all, precision);
        const BudgetResult r = budget_search(cfg, budget, a, Strategy::reversible, precision);
        nlohmann::json x;
        x["store_all_scale"] = s.scale;
        x["reversible_scale"] = r.scale;
        x["ratio"] = r.scale / s.scale;
        if (a == Axis::depth) {
            x["store_all_levels"] = s.levels;
            x["reversible_levels"] = r.levels;
            x["levels_ratio"] = static_cast<double>(r.levels) / static_cast<double>(s.levels);
            x["pooling_stages_ratio"] =
                s.levels > 1 ? static_cast<double>(r.levels - 1) / static_cast<double>(s.levels - 1) : 0.0;
            x["reversible_widths"] = r.config.widths;
        }
        if (a == Axis::channels) x["reversible_widths"] = r.config.widths;
        if (a == Axis::volume) x["reversible_image_size"] = r.config.image_size;
        j["axes"][axis_name(a)] = x;
    }
    return j;
}

}  // namespace revunet
