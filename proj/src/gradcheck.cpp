// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include "revunet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <variant>

#include "revunet/model.hpp"
#include "revunet/rng.hpp"

namespace revunet {

double relative_error(double a, double b, double floor) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

bool GradcheckReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

const CheckResult* GradcheckReport::worst_failure() const {
    const CheckResult* w = nullptr;
    for (const auto& c : checks) {
        if (!c.pass && (!w || c.worst / c.tolerance > w->worst / w->tolerance)) w = &c;
    }
    return w;
}

namespace {

void note(CheckResult& r, double err, const std::string& item, std::size_t probes = 1) {
    r.probes += probes;
    if (std::isnan(err)) err = INFINITY;
    if (r.worst_item.empty() || err > r.worst) {
        r.worst = std::max(r.worst, err);
        r.worst_item = item;
    }
}

void finish(CheckResult& r) { r.pass = r.worst <= r.tolerance; }

Tensor5d random_tensor(const Shape5& s, Rng& rng) {
    Tensor5d t(s);
    for (auto& v : t.data()) v = rng.normal();
    return t;
}

double dot(const Tensor5d& a, const Tensor5d& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
    return s;
}

CheckResult roundtrip_check(const Model<double>& m, std::uint64_t seed, const GradcheckOptions& opt) {
    CheckResult r{"rev_roundtrip", 0.0, opt.roundtrip_tol, {}, 0, 0, true};
    const auto& cfg = m.config();
    for (std::size_t s = 0; s < opt.roundtrip_seeds; ++s) {
        Rng rng(derive_seed(seed, "gradcheck.roundtrip", s));
        for (std::size_t i = 0; i < m.rev_blocks().size(); ++i) {
            const Shape5 shape{1, cfg.widths[i], cfg.image_size[0] >> i, cfg.image_size[1] >> i, cfg.image_size[2] >> i};
            const Tensor5d x = random_tensor(shape, rng);
            const auto& b = m.rev_blocks()[i];
            note(r, max_abs_diff(b.inverse(m.params(), b.forward(m.params(), x)), x), b.name());
        }
    }
    finish(r);
    return r;
}

struct NetworkProbe {
    Tensor5d x, proj;
};

Gradients<double> network_grads(const Model<double>& m, const NetworkProbe& p, Strategy s) {
    Tape<double> tape = m.make_tape();
    m.forward(p.x, s, &tape);
    Gradients<double> g = m.params().zeros_like();
    m.backward(tape, p.proj, g);
    return g;
}

CheckResult equivalence_check(const Model<double>& m, const NetworkProbe& p, const GradcheckOptions& opt) {
    CheckResult r{"strategy_equivalence", 0.0, opt.equivalence_tol, {}, 0, 0, true};
    const auto ga = network_grads(m, p, Strategy::store_all);
    const auto gr = network_grads(m, p, Strategy::reversible);
    for (std::size_t i = 0; i < ga.size(); ++i) {
        double worst = 0.0;
        for (std::size_t j = 0; j < ga[i].numel(); ++j) {
            worst = std::max(worst, relative_error(ga[i][j], gr[i][j], 1e-12));
        }
        note(r, worst, ga.name(i));
    }
    finish(r);
    return r;
}

// ReLU masks and max-pool winners of one forward pass.
std::vector<std::uint32_t> activation_pattern(const Tape<double>& tape) {
    std::vector<std::uint32_t> pat;
    for (const auto& e : tape.entries()) {
        if (const auto* r = std::get_if<ReluContext<double>>(&e.context)) {
            for (double v : r->output.data()) pat.push_back(v > 0.0 ? 1u : 0u);
        } else if (const auto* p = std::get_if<PoolContext>(&e.context)) {
            pat.insert(pat.end(), p->argmax.begin(), p->argmax.end());
        }
    }
    return pat;
}

struct Evaluated {
    double loss;
    std::vector<std::uint32_t> pattern;
};

Evaluated evaluate_loss(const Model<double>& m, const NetworkProbe& p) {
    Tape<double> tape = m.make_tape();
    const Tensor5d y = m.forward(p.x, Strategy::store_all, &tape);
    return {dot(y, p.proj), activation_pattern(tape)};
}

CheckResult network_fd_check(Model<double>& m, const NetworkProbe& p, std::uint64_t seed,
                             const GradcheckOptions& opt) {
    CheckResult r{"fd_network", 0.0, opt.network_fd_tol, {}, 0, 0, true};
    const auto g = network_grads(m, p, Strategy::reversible);
    double gmax = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) gmax = std::max(gmax, max_abs(g[i]));
    const double floor = std::max(opt.network_floor_fraction * gmax, 1e-12);
    const std::size_t total = m.params().scalar_count();
    Rng rng(derive_seed(seed, "gradcheck.fd_network"));
    auto& ps = m.params();
    const std::size_t max_draws = opt.fd_samples * (1 + opt.kink_resample_factor);
    for (std::size_t draws = 0; r.probes < opt.fd_samples && draws < max_draws; ++draws) {
        std::size_t flat = rng.below(total), i = 0;
        while (flat >= ps[i].numel()) flat -= ps[i++].numel();
        const double orig = ps[i][flat];
        ps.mutable_value(i)[flat] = orig + opt.fd_step;
        const Evaluated plus = evaluate_loss(m, p);
        ps.mutable_value(i)[flat] = orig - opt.fd_step;
        const Evaluated minus = evaluate_loss(m, p);
        ps.mutable_value(i)[flat] = orig;
        if (plus.pattern != minus.pattern) {
            ++r.skipped;
            continue;
        }
        const double fd = (plus.loss - minus.loss) / (2.0 * opt.fd_step);
        note(r, relative_error(g[i][flat], fd, floor), ps.name(i) + "[" + std::to_string(flat) + "]");
    }
    finish(r);
    if (r.probes < opt.fd_samples) r.pass = false;
    return r;
}

// One primitive op with its own parameters, probed at input and parameter
// coordinates against central differences of <proj, op(x)>.
struct OpCase {
    std::string label;
    OpSpec op;
    ParamStore<double> params;
    Tensor5d x;
};

std::vector<OpCase> op_cases(std::uint64_t seed) {
    Rng rng(derive_seed(seed, "gradcheck.ops"));
    std::vector<OpCase> cases;
    auto with_weight = [&](OpKind kind, const Shape5& xs, const Shape5& ws, bool bias) {
        OpCase c;
        c.label = op_kind_name(kind);
        c.op.kind = kind;
        c.op.name = c.label;
        c.op.weight = static_cast<std::ptrdiff_t>(c.params.add("weight", random_tensor(ws, rng)));
        if (bias) c.op.bias = static_cast<std::ptrdiff_t>(c.params.add("bias", random_tensor(Shape5{1, ws.n, 1, 1, 1}, rng)));
        c.x = random_tensor(xs, rng);
        cases.push_back(std::move(c));
    };
    with_weight(OpKind::conv3d, {1, 2, 3, 3, 3}, {2, 2, 3, 3, 3}, true);
    with_weight(OpKind::pointwise, {1, 2, 4, 4, 4}, {3, 2, 1, 1, 1}, true);
    with_weight(OpKind::depthwise, {1, 2, 3, 3, 3}, {2, 1, 3, 3, 3}, false);
    {
        OpCase c;
        c.label = op_kind_name(OpKind::group_norm);
        c.op.kind = OpKind::group_norm;
        c.op.name = c.label;
        c.op.norm = {2, 1e-5};
        c.op.gamma = static_cast<std::ptrdiff_t>(c.params.add("gamma", random_tensor(Shape5{1, 4, 1, 1, 1}, rng)));
        c.op.beta = static_cast<std::ptrdiff_t>(c.params.add("beta", random_tensor(Shape5{1, 4, 1, 1, 1}, rng)));
        c.x = random_tensor({1, 4, 3, 3, 3}, rng);
        cases.push_back(std::move(c));
    }
    for (OpKind k : {OpKind::relu, OpKind::maxpool, OpKind::upsample}) {
        OpCase c;
        c.label = op_kind_name(k);
        c.op.kind = k;
        c.op.name = c.label;
        c.x = random_tensor({1, 2, 4, 4, 4}, rng);
        if (k == OpKind::relu) {
            // Keep every input away from the kink so central differences are exact.
            for (auto& v : c.x.data()) v = (v < 0 ? -0.05 : 0.05) + v;
        }
        cases.push_back(std::move(c));
    }
    return cases;
}

CheckResult op_fd_check(std::uint64_t seed, const GradcheckOptions& opt) {
    CheckResult r{"fd_primitives", 0.0, opt.op_fd_tol, {}, 0, 0, true};
    Rng rng(derive_seed(seed, "gradcheck.ops.probe"));
    for (OpCase& c : op_cases(seed)) {
        const Tensor5d y = run_op(c.op, c.params, c.x);
        const Tensor5d proj = random_tensor(y.shape(), rng);
        Tape<double> tape(c.params.version());
        run_op(c.op, c.params, c.x, &tape);
        Gradients<double> grads = c.params.zeros_like();
        const Tensor5d dx = run_op_vjp(c.op, c.params, tape.top().context, proj, grads);
        auto loss = [&]() { return dot(run_op(c.op, c.params, c.x), proj); };
        const std::size_t n = c.x.numel() + c.params.scalar_count();
        if (n < opt.op_probes) throw std::logic_error("op case " + c.label + " has too few coordinates");
        double worst = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double* slot = nullptr;
            double analytic = 0.0;
            if (k < c.x.numel()) {
                slot = &c.x[k];
                analytic = dx[k];
            } else {
                std::size_t flat = k - c.x.numel(), i = 0;
                while (flat >= c.params[i].numel()) flat -= c.params[i++].numel();
                slot = &c.params.mutable_value(i)[flat];
                analytic = grads[i][flat];
            }
            const double orig = *slot;
            *slot = orig + opt.fd_step;
            const double lp = loss();
            *slot = orig - opt.fd_step;
            const double lm = loss();
            *slot = orig;
            const double e = relative_error(analytic, (lp - lm) / (2.0 * opt.fd_step));
            worst = std::isnan(e) ? INFINITY : std::max(worst, e);
        }
        note(r, worst, c.label, n);
    }
    finish(r);
    return r;
}

}  // namespace

GradcheckReport run_gradcheck(const UNetConfig& cfg, std::uint64_t seed, const GradcheckOptions& opt) {
    validate(cfg);
    GradcheckReport rep;
    rep.config = toy_analog(cfg);
    Model<double> m = Model<double>::build(rep.config, derive_seed(seed, "gradcheck.model"));
    // Non-trivial norm affine parameters so every gradient path is exercised.
    Rng prng(derive_seed(seed, "gradcheck.affine"));
    for (std::size_t i = 0; i < m.params().size(); ++i) {
        const std::string& n = m.params().name(i);
        const bool affine = n.ends_with(".gamma") || n.ends_with(".beta") || n.ends_with(".bias");
        if (!affine) continue;
        for (auto& v : m.params().mutable_value(i).data()) v += 0.2 * prng.normal();
    }
    Rng rng(derive_seed(seed, "gradcheck.input"));
    NetworkProbe probe{random_tensor(m.input_shape(), rng), {}};
    const Shape5 out{1, rep.config.num_classes, rep.config.image_size[0], rep.config.image_size[1], rep.config.image_size[2]};
    probe.proj = random_tensor(out, rng);

    rep.checks.push_back(roundtrip_check(m, seed, opt));
    rep.checks.push_back(equivalence_check(m, probe, opt));
    rep.checks.push_back(network_fd_check(m, probe, seed, opt));
    rep.checks.push_back(op_fd_check(seed, opt));
    return rep;
}

nlohmann::json to_json(const GradcheckReport& r) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) {
        checks.push_back({{"name", c.name},
                          {"worst", c.worst},
                          {"tolerance", c.tolerance},
                          {"worst_item", c.worst_item},
                          {"probes", c.probes},
                          {"skipped", c.skipped},
                          {"pass", c.pass}});
    }
    nlohmann::json j{{"schema_version", 1}, {"config", to_json(r.config)}, {"checks", checks}, {"pass", r.pass()}};
    if (const auto* w = r.worst_failure()) j["worst_offender"] = {{"check", w->name}, {"item", w->worst_item}};
    return j;
}

}  // namespace revunet
