// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0
//
// revunet: command-line front end.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.
// Every JSON report carries "schema_version": 1.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "revunet/ensemble.hpp"
#include "revunet/gradcheck.hpp"
#include "revunet/memplan.hpp"
#include "revunet/params_io.hpp"
#include "revunet/phantom.hpp"
#include "revunet/rng.hpp"
#include "revunet/tensor_io.hpp"
#include "revunet/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace revunet;

namespace {

constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config_path;
    std::string preset_name;
    std::optional<std::uint64_t> seed;
    std::string precision = "single";
    std::string out;
};

void add_config_flags(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "Model config JSON");
    cmd->add_option("--preset", c.preset_name, "Named preset")->check(CLI::IsMember(preset_names()));
}

UNetConfig resolve_config(const Common& c, const std::string& fallback = {}) {
    if (!c.config_path.empty() && !c.preset_name.empty()) throw UsageError("--config and --preset are exclusive");
    if (!c.config_path.empty()) return load_config(c.config_path);
    if (!c.preset_name.empty()) return preset(c.preset_name);
    if (!fallback.empty()) return preset(fallback);
    throw UsageError("one of --config or --preset is required");
}

std::uint64_t require_seed(const Common& c) {
    if (!c.seed) throw UsageError("--seed is required for this command");
    return *c.seed;
}

void write_json(const json& j, const std::string& path) {
    std::ofstream f(path);
    f << j.dump(2) << '\n';
    if (!f) throw std::runtime_error("cannot write " + path);
}

void emit(const json& j, const std::string& out_dir, const std::string& file) {
    std::cout << j.dump(2) << '\n';
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_json(j, (fs::path(out_dir) / file).string());
    }
}

// ---------------------------------------------------------------- gradcheck

int cmd_gradcheck(const Common& c, const std::string& fault_op, std::size_t fd_samples) {
    const UNetConfig cfg = resolve_config(c);
    const std::uint64_t seed = require_seed(c);
    if (!fault_op.empty()) {
        static const std::map<std::string, OpKind> kinds = {
            {"conv3d", OpKind::conv3d},         {"pointwise", OpKind::pointwise},
            {"depthwise", OpKind::depthwise},   {"group_norm", OpKind::group_norm},
            {"relu", OpKind::relu},             {"maxpool", OpKind::maxpool},
            {"upsample", OpKind::upsample}};
        auto it = kinds.find(fault_op);
        if (it == kinds.end()) throw UsageError("unknown --inject-fault op '" + fault_op + "'");
        testing::set_vjp_fault(it->second, 1.0 + 1e-3);
    }
    GradcheckOptions opt;
    opt.fd_samples = fd_samples;
    const GradcheckReport rep = run_gradcheck(cfg, seed, opt);
    testing::clear_vjp_fault();
    emit(to_json(rep), c.out, "gradcheck.json");
    for (const auto& ch : rep.checks) {
        std::cerr << (ch.pass ? "PASS " : "FAIL ") << std::left << std::setw(22) << ch.name << " worst "
                  << std::scientific << std::setprecision(3) << ch.worst << " (tol " << ch.tolerance << ") at "
                  << ch.worst_item << '\n';
    }
    if (const auto* w = rep.worst_failure()) {
        std::cerr << "worst offender: " << w->name << " / " << w->worst_item << '\n';
        return kVerifyFailed;
    }
    return kOk;
}

// ---------------------------------------------------------------- memplan

void print_compare(const MemoryEstimate& sa, const MemoryEstimate& rv) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> rows;
    for (const auto& [k, v] : sa.stage_elements) rows[k].first = v;
    for (const auto& [k, v] : rv.stage_elements) rows[k].second = v;
    std::cerr << std::left << std::setw(14) << "stage" << std::right << std::setw(18) << "store-all B"
              << std::setw(18) << "reversible B" << '\n';
    for (const auto& [k, v] : rows) {
        std::cerr << std::left << std::setw(14) << k << std::right << std::setw(18) << v.first * sa.scalar_bytes
                  << std::setw(18) << v.second * rv.scalar_bytes << '\n';
    }
    std::cerr << std::left << std::setw(14) << "peak" << std::right << std::setw(18) << sa.peak_bytes()
              << std::setw(18) << rv.peak_bytes() << '\n';
}

int cmd_memplan(const Common& c, const std::string& budget_s, const std::string& axis_s, const std::string& strategy_s,
                bool compare, bool claims) {
    const UNetConfig cfg = resolve_config(c);
    const Precision prec = parse_precision(c.precision);
    json j;
    j["schema_version"] = 1;
    if (claims) {
        j["claims"] = claims_report(cfg, prec);
    } else if (!axis_s.empty()) {
        const Axis axis = parse_axis(axis_s);
        const std::size_t budget = budget_s.empty() ? estimate(cfg, Strategy::store_all, prec).peak_bytes()
                                                    : parse_budget(budget_s);
        json res;
        for (Strategy s : {Strategy::store_all, Strategy::reversible}) {
            const std::size_t base_peak = estimate(cfg, s, prec).peak_bytes();
            if (base_peak > budget) {
                // The unscaled config already exceeds the budget under this strategy.
                res[strategy_name(s)] = {{"feasible", false}, {"base_peak_bytes", base_peak}};
                continue;
            }
            const BudgetResult r = budget_search(cfg, budget, axis, s, prec);
            res[strategy_name(s)] = {{"feasible", true},
                                     {"scale", r.scale},
                                     {"peak_bytes", r.peak_bytes},
                                     {"levels", r.levels},
                                     {"config", to_json(r.config)}};
        }
        if (res["reversible"]["feasible"].get<bool>() && res["store-all"]["feasible"].get<bool>()) {
            res["ratio"] = res["reversible"]["scale"].get<double>() / res["store-all"]["scale"].get<double>();
        } else {
            res["ratio"] = nullptr;
        }
        j["budget_bytes"] = budget;
        j["axis"] = axis_name(axis);
        j["search"] = res;
    } else {
        const Strategy s = parse_strategy(strategy_s);
        const MemoryEstimate e = estimate(cfg, s, prec);
        j["estimate"] = to_json(e);
        if (!budget_s.empty()) {
            const std::size_t budget = parse_budget(budget_s);
            j["budget_bytes"] = budget;
            j["fits"] = e.peak_bytes() <= budget;
        }
    }
    if (compare) {
        print_compare(estimate(cfg, Strategy::store_all, prec), estimate(cfg, Strategy::reversible, prec));
    }
    emit(j, c.out, "memplan.json");
    return kOk;
}

// ---------------------------------------------------------------- phantoms

int cmd_make_phantoms(const Common& c, std::size_t count, std::vector<std::size_t> size) {
    const std::uint64_t seed = require_seed(c);
    if (c.out.empty()) throw UsageError("--out is required");
    if (size.size() == 1) size = {size[0], size[0], size[0]};
    if (size.size() != 3) throw UsageError("--size takes one or three extents");
    std::vector<Phantom> ps;
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < count; ++i) {
        seeds.push_back(derive_seed(seed, "phantom", i));
        ps.push_back(make_phantom(seeds.back(), {size[0], size[1], size[2]}));
    }
    write_corpus(ps, seeds, c.out);
    std::cout << json{{"schema_version", 1}, {"count", count}, {"out", c.out}}.dump() << '\n';
    return kOk;
}

// ---------------------------------------------------------------- train

template <typename T>
int train_impl(const UNetConfig& cfg, const Common& c, const std::vector<Phantom>& tr, const std::vector<Phantom>& ho,
               TrainOptions opt) {
    fs::create_directories(c.out);
    std::ofstream log(fs::path(c.out) / "metrics.jsonl");
    opt.log = &log;
    TrainResult<T> r = train<T>(cfg, tr, ho, opt);
    save_params(r.model.params(), fs::path(c.out) / "model", cfg);
    json summary{{"schema_version", 1},
                 {"config", to_json(cfg)},
                 {"seed", opt.seed},
                 {"precision", c.precision},
                 {"strategy", strategy_name(opt.strategy)},
                 {"schedule", to_json(opt.schedule)},
                 {"train_count", tr.size()},
                 {"holdout_count", ho.size()},
                 {"initial_holdout_mean_dice", r.initial.mean},
                 {"final_holdout_mean_dice", r.log.empty() ? r.initial.mean : r.log.back().holdout_mean_dice},
                 {"steps", r.log.empty() ? 0 : r.log.back().step}};
    json train_dice = json::array();
    for (const auto& p : tr) {
        train_dice.push_back(mean_dice(segment(r.model, p.volume), p.labels, cfg.num_classes));
    }
    summary["train_mean_dice"] = train_dice;
    emit(summary, c.out, "summary.json");
    return kOk;
}

int cmd_train(const Common& c, const std::string& data, std::size_t epochs, std::size_t max_steps, double lr,
              const std::string& strategy_s, std::size_t holdout, bool no_augment, double smoothing) {
    const UNetConfig cfg = resolve_config(c, "smoke");
    TrainOptions opt;
    opt.seed = require_seed(c);
    if (c.out.empty()) throw UsageError("--out is required");
    if (data.empty()) throw UsageError("--data is required");
    std::vector<Phantom> all = read_corpus(data);
    if (all.size() < 2) throw UsageError("corpus needs at least 2 phantoms");
    std::size_t n_hold = holdout ? holdout : holdout_split(all.size()).second;
    if (n_hold >= all.size()) throw UsageError("holdout leaves no training data");
    for (const auto& p : all) {
        if (p.labels.dims != cfg.image_size) throw UsageError("phantom size does not match config image_size");
        check_label_range(p.labels, cfg.num_classes);
    }
    std::vector<Phantom> tr(all.begin(), all.end() - static_cast<std::ptrdiff_t>(n_hold));
    std::vector<Phantom> ho(all.end() - static_cast<std::ptrdiff_t>(n_hold), all.end());
    opt.epochs = epochs;
    opt.max_steps = max_steps;
    opt.strategy = parse_strategy(strategy_s);
    opt.augment = !no_augment;
    opt.smoothing = smoothing;
    opt.schedule.base_lr = lr;
    opt.schedule.total_epochs = epochs;
    // Drops at the same relative points as the 250/400-of-500 schedule.
    opt.schedule.drop_epochs = {epochs / 2, epochs * 4 / 5};
    if (epochs == 0) opt.schedule.total_epochs = 1;
    return parse_precision(c.precision) == Precision::f64 ? train_impl<double>(cfg, c, tr, ho, opt)
                                                          : train_impl<float>(cfg, c, tr, ho, opt);
}

// ---------------------------------------------------------------- segment

template <typename T>
int segment_impl(const fs::path& model_dir, const std::string& volume_path, const std::string& labels_path,
                 const std::string& out) {
    const json manifest = read_manifest(model_dir);
    if (!manifest.contains("config")) throw UsageError("model manifest carries no config");
    const UNetConfig cfg = config_from_json(manifest.at("config"));
    Model<T> m = Model<T>::build(cfg, 0);
    load_params_into(m.params(), model_dir);
    const Tensor5f vol = tensor_read<float>(volume_path);
    const Shape5& s = vol.shape();
    if (!(s == m.input_shape())) throw ShapeError("volume " + s.str() + " does not match model input " + m.input_shape().str());
    const LabelMap pred = segment(m, vol);
    json j{{"schema_version", 1}, {"volume", volume_path}};
    if (!out.empty()) {
        tensor_write(labels_to_tensor<float>(pred), out);
        j["labels_out"] = out;
    }
    if (!labels_path.empty()) {
        const LabelMap truth = labels_from_tensor(tensor_read<float>(labels_path));
        check_label_range(truth, cfg.num_classes);
        if (truth.dims != pred.dims) throw ShapeError("reference labels do not match the volume");
        j["dice"] = per_class_dice(pred, truth, cfg.num_classes);
        j["mean_dice"] = mean_dice(pred, truth, cfg.num_classes);
    }
    std::cout << j.dump(2) << '\n';
    return kOk;
}

int cmd_segment(const Common& c, const std::string& model_dir, const std::string& volume, const std::string& labels) {
    if (model_dir.empty() || volume.empty()) throw UsageError("--model and --volume are required");
    const std::string out = c.out;
    const json manifest = read_manifest(model_dir);
    const std::string stored = manifest.value("precision", std::string("single"));
    return parse_precision(stored) == Precision::f64 ? segment_impl<double>(model_dir, volume, labels, out)
                                                     : segment_impl<float>(model_dir, volume, labels, out);
}

// ---------------------------------------------------------------- ensemble-select

int cmd_ensemble(const Common& c, const std::string& stats_path, const std::string& volume, const std::string& reading_s) {
    if (stats_path.empty() || volume.empty()) throw UsageError("--stats and --volume are required");
    std::ifstream in(stats_path);
    if (!in) throw UsageError("cannot open " + stats_path);
    json stats;
    in >> stats;
    const auto dice = stats.at("dice").get<std::vector<std::vector<double>>>();
    const auto hists = stats.at("train_histograms").get<std::vector<std::vector<std::uint64_t>>>();
    const std::size_t bins = hists.empty() ? 64 : hists.front().size();
    const SelectionReading reading = parse_reading(reading_s);
    const SelectionResult r = ensemble_select(dice, hists, tensor_read<float>(volume), reading, bins);
    json j{{"schema_version", 1}, {"reading", reading_name(reading)}, {"model_index", r.index},
           {"scores", r.scores}, {"distances", r.distances}};
    emit(j, c.out, "ensemble.json");
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reversible 3D U-Net engine: verification, memory planning, training"};
    app.require_subcommand(1);
    Common c;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", c.seed, "Seed for every random stream");
        cmd->add_option("--precision", c.precision, "single or double")->check(CLI::IsMember({"single", "double"}));
        cmd->add_option("--out", c.out, "Output directory or file");
    };

    auto* gc = app.add_subcommand("gradcheck", "Round-trip, strategy-equivalence and finite-difference checks");
    add_config_flags(gc, c);
    add_common(gc);
    std::string fault_op;
    std::size_t fd_samples = 200;
    gc->add_option("--inject-fault", fault_op, "Corrupt the VJP of one op kind (verification of the checker)");
    gc->add_option("--fd-samples", fd_samples, "Parameters probed in the network check");

    auto* mp = app.add_subcommand("memplan", "Analytic activation-memory estimate and budget search");
    add_config_flags(mp, c);
    add_common(mp);
    std::string budget, axis, strategy = "reversible";
    bool compare = false, claims = false;
    mp->add_option("--budget", budget, "Byte budget, e.g. 14GB or 1.5e9");
    mp->add_option("--axis", axis, "volume, depth or channels")->check(CLI::IsMember({"volume", "depth", "channels"}));
    mp->add_option("--strategy", strategy, "reversible or store-all")->check(CLI::IsMember({"reversible", "store-all"}));
    mp->add_flag("--compare", compare, "Print a store-all vs reversible table to stderr");
    mp->add_flag("--claims", claims, "Budget search on every axis at the store-all budget");

    auto* ph = app.add_subcommand("make-phantoms", "Write a synthetic corpus");
    add_common(ph);
    std::size_t count = 25;
    std::vector<std::size_t> size{32};
    ph->add_option("--count", count, "Number of phantoms");
    ph->add_option("--size", size, "Extent (one value) or d h w")->expected(1, 3);

    auto* tr = app.add_subcommand("train", "Train on a phantom corpus");
    add_config_flags(tr, c);
    add_common(tr);
    std::string data, tr_strategy = "reversible";
    std::size_t epochs = 10, max_steps = 0, holdout = 0;
    double lr = 1e-2, smoothing = 1.0;
    bool no_augment = false;
    tr->add_option("--data", data, "Corpus directory from make-phantoms");
    tr->add_option("--epochs", epochs, "Epochs");
    tr->add_option("--max-steps", max_steps, "Optimizer step cap (0 = none)");
    tr->add_option("--lr", lr, "Base learning rate");
    tr->add_option("--holdout", holdout, "Holdout count (default: 40/370 of the corpus)");
    tr->add_option("--smoothing", smoothing, "Soft Dice smoothing");
    tr->add_option("--strategy", tr_strategy, "reversible or store-all")->check(CLI::IsMember({"reversible", "store-all"}));
    tr->add_flag("--no-augment", no_augment, "Disable augmentation");

    auto* sg = app.add_subcommand("segment", "Label a volume with a trained model");
    add_common(sg);
    std::string model_dir, volume, labels;
    sg->add_option("--model", model_dir, "Model directory (manifest.json)");
    sg->add_option("--volume", volume, "RVT1 volume (1,C,d,h,w)");
    sg->add_option("--labels", labels, "Optional reference labels for Dice");

    auto* es = app.add_subcommand("ensemble-select", "Pick a model by histogram-weighted training Dice");
    add_common(es);
    std::string stats_path, es_volume, reading = "literal";
    es->add_option("--stats", stats_path, "JSON with dice[models][train] and train_histograms[train][bins]");
    es->add_option("--volume", es_volume, "Test volume (RVT1)");
    es->add_option("--reading", reading, "literal or similarity")->check(CLI::IsMember({"literal", "similarity"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*gc) return cmd_gradcheck(c, fault_op, fd_samples);
        if (*mp) return cmd_memplan(c, budget, axis, strategy, compare, claims);
        if (*ph) return cmd_make_phantoms(c, count, size);
        if (*tr) return cmd_train(c, data, epochs, max_steps, lr, tr_strategy, holdout, no_augment, smoothing);
        if (*sg) return cmd_segment(c, model_dir, volume, labels);
        if (*es) return cmd_ensemble(c, stats_path, es_volume, reading);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {  // ConfigError, ShapeError and bad values
        std::cerr << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
