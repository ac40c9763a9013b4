// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Usage: acceptance [output_dir]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lars/dataset.hpp"
#include "lars/diagnostics.hpp"
#include "lars/experiment.hpp"
#include "lars/layers.hpp"
#include "lars/optimizer.hpp"
#include "test_util.hpp"

using namespace lars;
namespace fs = std::filesystem;
using lars::testing::central_difference;
using lars::testing::max_rel_err;
using lars::testing::model_numeric_grad;
using lars::testing::probe;
using lars::testing::random_batch;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void run(const std::string& name, double budget_seconds, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream time;
    time.precision(3);
    time << secs << " s (budget " << budget_seconds << " s)";
    if (secs > budget_seconds) {
        o.pass = false;
        o.detail += "; over time budget";
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " | " << o.detail << " | " << time.str() << std::endl;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

OptimizerConfig lars_cfg(double lr, double eta, double beta) {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::lars;
    cfg.base_lr = lr;
    cfg.trust_coeff = eta;
    cfg.weight_decay = beta;
    cfg.schedule.decay = DecayKind::constant;
    cfg.total_steps = 1;
    return cfg;
}

std::vector<ParamGroup> one_group(const Tensor& w, const Tensor& g) {
    std::vector<ParamGroup> groups{ParamGroup("w", ParamKind::weight, w)};
    groups[0].grad = g;
    return groups;
}

// 1. Gradient-scale invariance.
Outcome scale_invariance() {
    Rng rng(101);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(64);
        const Tensor w = gaussian(rng, {n}, 0.0, std::pow(10.0, rng.uniform(-2, 1)));
        const Tensor g = gaussian(rng, {n}, 0.0, std::pow(10.0, rng.uniform(-2, 1)));
        const double c = std::pow(10.0, rng.uniform(-3, 3));
        const auto cfg = lars_cfg(rng.uniform(0.1, 10), rng.uniform(1e-4, 1e-1), 0.0);
        auto a = one_group(w, g);
        auto b = one_group(w, scale(g, c));
        lars_step(a, cfg, 0);
        lars_step(b, cfg, 0);
        // With m = 0 the momentum buffer is the applied update.
        worst = std::max(worst, l2_norm(sub(a[0].momentum_buf, b[0].momentum_buf)) / l2_norm(a[0].momentum_buf));
    }
    return {worst <= 1e-12, "100 triples, max relative update difference " + fmt(worst) + " (limit 1e-12)"};
}

// 2. Update-norm bound.
Outcome update_norm_bound() {
    Rng rng(102);
    double worst_excess = 0.0, worst_equality = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(64);
        const Tensor w = gaussian(rng, {n}, 0.0, rng.uniform(0.01, 5));
        const Tensor g = gaussian(rng, {n}, 0.0, rng.uniform(0.01, 5));
        const bool decay = trial % 2 == 1;
        const auto cfg = lars_cfg(rng.uniform(0.01, 10), rng.uniform(1e-4, 1e-1), decay ? rng.uniform(0, 0.01) : 0.0);
        auto groups = one_group(w, g);
        lars_step(groups, cfg, 0);
        const double dw = l2_norm(groups[0].momentum_buf);
        const double bound = cfg.base_lr * cfg.trust_coeff * l2_norm(w);
        worst_excess = std::max(worst_excess, dw / bound - 1.0);
        if (!decay) worst_equality = std::max(worst_equality, rel(dw, bound));
    }
    return {worst_excess <= 1e-12 && worst_equality <= 1e-12,
            "1000 steps, max |dw|/bound - 1 = " + fmt(worst_excess) + ", max equality gap (beta=0) " +
                fmt(worst_equality)};
}

// 3. Gradient oracle across layer types and whole models.
Outcome gradient_oracle() {
    Rng rng(103);
    double dense = 0.0, relu = 0.0, loss = 0.0, bn = 0.0, model_smooth = 0.0, model_bn = 0.0;
    const int configs = 24;
    for (int trial = 0; trial < configs; ++trial) {
        // At least four rows: with two, batch norm's input gradient is O(eps).
        const std::size_t b = 4 + rng.uniform_index(5), n = 1 + rng.uniform_index(6), m = 2 + rng.uniform_index(5);
        const Tensor x = gaussian(rng, {b, n}, 0.0, 1.0);
        const Tensor w = gaussian(rng, {n, m}, 0.0, 1.0);
        const Tensor bias = gaussian(rng, {m}, 0.0, 1.0);
        const Tensor r = gaussian(rng, {b, m}, 0.0, 1.0);
        const auto dg = dense_backward(r, x, w);
        dense = std::max({dense,
                          max_rel_err(dg.dw, central_difference([&](const Tensor& v) { return probe(dense_forward(x, v, bias), r); }, w)),
                          max_rel_err(dg.db, central_difference([&](const Tensor& v) { return probe(dense_forward(x, w, v), r); }, bias)),
                          max_rel_err(dg.dx, central_difference([&](const Tensor& v) { return probe(dense_forward(v, w, bias), r); }, x))});

        Tensor xr = gaussian(rng, {b, m}, 0.0, 1.0);
        for (double& v : xr.data())
            if (std::abs(v) < 1e-3) v = 0.5;
        relu = std::max(relu, max_rel_err(relu_backward(r, xr),
                                          central_difference([&](const Tensor& v) { return probe(relu_forward(v), r); }, xr)));

        std::vector<int> labels(b);
        for (auto& l : labels) l = static_cast<int>(rng.uniform_index(m));
        const Tensor logits = gaussian(rng, {b, m}, 0.0, 2.0);
        loss = std::max(loss, max_rel_err(softmax_ce_loss(logits, labels).dlogits,
                                          central_difference([&](const Tensor& v) { return softmax_ce_loss(v, labels).loss; }, logits)));

        const Tensor gamma = gaussian(rng, {m}, 1.0, 0.3), beta = gaussian(rng, {m}, 0.0, 0.3);
        auto fwd = [&](const Tensor& xx, const Tensor& gg, const Tensor& bb) {
            return batchnorm_forward(xx, gg, bb, Mode::training, nullptr).y;
        };
        const auto bg = batchnorm_backward(r, batchnorm_forward(xr, gamma, beta, Mode::training, nullptr).cache);
        bn = std::max({bn,
                       max_rel_err(bg.dx, central_difference([&](const Tensor& v) { return probe(fwd(v, gamma, beta), r); }, xr)),
                       max_rel_err(bg.dgamma, central_difference([&](const Tensor& v) { return probe(fwd(xr, v, beta), r); }, gamma)),
                       max_rel_err(bg.dbeta, central_difference([&](const Tensor& v) { return probe(fwd(xr, gamma, v), r); }, beta))});

        // Whole model, with and without batch norm.
        const bool with_bn = trial % 2 == 1;
        std::vector<std::size_t> hidden(1 + rng.uniform_index(2));
        for (auto& h : hidden) h = 2 + rng.uniform_index(5);
        Model model = Model::mlp({n + 1, hidden, m, with_bn}, rng);
        for (auto& g : model.groups())
            for (double& v : g.value.data()) v += rng.normal(0.0, 0.3);
        const Batch batch = random_batch(rng, b, n + 1, m);
        model.forward_backward(batch);
        std::size_t last_bn = 0;
        for (std::size_t g = 0; g < model.groups().size(); ++g)
            if (model.groups()[g].kind == ParamKind::bn_shift) last_bn = g;
        for (std::size_t g = 0; g < model.groups().size(); ++g) {
            const auto num = model_numeric_grad(model, batch, g);
            Tensor analytic = model.groups()[g].grad, numeric = num.grad;
            for (std::size_t i = 0; i < analytic.size(); ++i)
                if (num.kink[i]) analytic[i] = numeric[i] = 0.0;
            double& slot = (with_bn && g <= last_bn) ? model_bn : model_smooth;
            slot = std::max(slot, max_rel_err(analytic, numeric));
        }
    }
    const bool pass = dense < 1e-5 && relu < 1e-5 && loss < 1e-5 && model_smooth < 1e-5 && bn < 1e-4 && model_bn < 1e-4;
    return {pass, std::to_string(configs) + " configurations; max rel err dense " + fmt(dense) + ", relu " +
                      fmt(relu) + ", loss " + fmt(loss) + ", model " + fmt(model_smooth) + " (limit 1e-5); bn " +
                      fmt(bn) + ", bn model " + fmt(model_bn) + " (limit 1e-4)"};
}

// 4. Linear-scaling exactness and the quadratic gap.
Outcome linear_scaling() {
    Rng rng(104);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Tensor w0 = gaussian(rng, {8}, 0.0, 1.0), g = gaussian(rng, {8}, 0.0, 1.0);
        const auto r = linear_scaling_equivalence_check(w0, g, rng.uniform(1e-3, 1.0), 16);
        worst = std::max(worst, max_abs_diff(r.two_small_steps, r.one_large_step));
    }
    const std::size_t batch = 8;
    std::vector<double> a(2 * batch);
    std::vector<Tensor> c;
    for (auto& v : a) v = rng.uniform(0.5, 2.0);
    for (std::size_t i = 0; i < 2 * batch; ++i) c.push_back(gaussian(rng, {4}, 0.0, 1.0));
    const SampleGradient grad = [&](std::size_t i, const Tensor& w) { return scale(sub(w, c[i]), a[i]); };
    const Tensor w0({4}, 1.0);
    auto gap = [&](double lr) {
        const auto r = linear_scaling_equivalence_check(w0, grad, lr, batch);
        return l2_norm(sub(r.two_small_steps, r.one_large_step));
    };
    std::string ratios;
    bool quad = true;
    for (double lr : {1e-1, 1e-2, 1e-3}) {
        const double ratio = gap(lr) / gap(lr / 2);
        ratios += (ratios.empty() ? "" : ", ") + fmt(ratio);
        quad = quad && std::abs(ratio - 4.0) < 0.2;
    }
    return {worst <= 1e-12 && quad, "constant-gradient endpoint gap " + fmt(worst) +
                                        " (limit 1e-12); quadratic gap ratio per halving " + ratios + " (expect ~4)"};
}

// 5. Accumulation equivalence.
Outcome accumulation() {
    Rng rng(105);
    const Model base = Model::mlp({20, {32, 16}, 5, false}, rng);
    const Batch batch = random_batch(rng, 64, 20, 5);
    Model full = base;
    full.forward_backward(batch);
    double grad_gap = 0.0;
    for (std::size_t k : {1u, 2u, 4u, 8u}) {
        Model m = base;
        accumulate_gradients(m, split_batch(batch, k));
        for (std::size_t g = 0; g < m.groups().size(); ++g)
            grad_gap = std::max(grad_gap, max_abs_diff(m.groups()[g].grad, full.groups()[g].grad));
    }
    OptimizerConfig cfg = lars_cfg(2.0, 0.001, 0.0005);
    cfg.momentum = 0.9;
    cfg.schedule.decay = DecayKind::polynomial;
    cfg.total_steps = 10;
    double traj_gap = 0.0;
    for (std::size_t k : {2u, 4u, 8u}) {
        Model mono = base, chunked = base;
        for (std::size_t t = 0; t < 3; ++t) {
            mono.forward_backward(batch);
            lars_step(mono.groups(), cfg, t);
            accumulate_gradients(chunked, split_batch(batch, k));
            lars_step(chunked.groups(), cfg, t);
        }
        for (std::size_t g = 0; g < mono.groups().size(); ++g)
            traj_gap = std::max(traj_gap, max_abs_diff(mono.groups()[g].value, chunked.groups()[g].value));
    }
    return {grad_gap <= 1e-12 && traj_gap <= 1e-12, "chunkings {1,2,4,8} of 64: max grad gap " + fmt(grad_gap) +
                                                        ", 3-step weight gap " + fmt(traj_gap) + " (limit 1e-12)"};
}

// 6. Cross-layer spread of |w| / |g| at the first iteration.
Outcome norm_ratio_spread() {
    ExperimentSpec spec;
    spec.dataset.blobs = {10, 784, 100, 10, 1.0, 1.0};
    spec.seed = 0;
    const auto data = load_dataset(spec);
    Rng init = Rng(0).fork(2);
    Model m = Model::mlp(Topology{}, init);
    m.forward_backward(data.train.slice(0, 32));
    OptimizerConfig cfg = lars_cfg(1.0, 0.001, 0.0005);
    const auto rows = capture_norms(m.groups(), 1, cfg);
    double lo = INFINITY, hi = 0.0, recompute = 0.0;
    std::string per_group;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.ratio) recompute = std::max(recompute, rel(*r.ratio, r.w_norm / r.g_norm));
        if (m.groups()[i].kind != ParamKind::weight || !r.ratio) continue;
        lo = std::min(lo, *r.ratio);
        hi = std::max(hi, *r.ratio);
        per_group += " " + r.group + "=" + fmt(*r.ratio);
    }
    return {hi / lo > 10.0 && recompute <= 1e-12,
            "weight ratios" + per_group + "; spread " + fmt(hi / lo) + " (need > 10); recompute err " + fmt(recompute)};
}

ExperimentSpec scaling_base(const fs::path& out) {
    ExperimentSpec s;
    s.dataset.blobs = {10, 32, 1000, 200, 0.5, 1.0};
    s.model.hidden = {256, 128};
    s.epochs = 10;
    s.seed = 0;
    s.optimizer.momentum = 0.9;
    s.optimizer.weight_decay = 0.0005;
    s.save_checkpoint = false;
    s.output_dir = out.string();
    return s;
}

// 7. Desk-scale scaling study.
Outcome scaling_study(const fs::path& out) {
    double best_acc = -1.0, best_lr = 0.0;
    std::string baseline;
    for (double lr : {0.002, 0.005, 0.01, 0.02}) {
        auto s = scaling_base(out / ("baseline_lr_" + format_double(lr)));
        s.optimizer.kind = OptimizerKind::sgd_momentum;
        s.optimizer.base_lr = lr;
        s.batch_size = 32;
        const auto r = run_experiment(s);
        const double acc = r.test_accuracy.value_or(0.0);
        baseline += " " + format_double(lr) + ":" + fmt(100 * acc);
        if (acc > best_acc) best_acc = acc, best_lr = lr;
    }

    auto l = scaling_base(out / "lars_b1024");
    l.optimizer.kind = OptimizerKind::lars;
    l.optimizer.base_lr = 5.0;
    l.optimizer.trust_coeff = 0.001;
    l.optimizer.warmup_epochs = 0.5;  // 5% of the 10-epoch budget
    l.optimizer.warmup_init_lr = 0.001;
    l.optimizer.decay = DecayKind::polynomial;
    l.optimizer.power = 2.0;
    l.batch_size = 1024;
    l.chunk_size = 128;
    const auto rl = run_experiment(l);

    auto p = scaling_base(out / "sgd_b1024");
    p.optimizer.kind = OptimizerKind::sgd_momentum;
    p.optimizer.base_lr = best_lr;
    p.optimizer.lr_scaling = LrScaling::linear;
    p.batch_size = 1024;
    p.chunk_size = 128;
    const auto rp = run_experiment(p);

    const double lars_acc = rl.test_accuracy.value_or(0.0);
    const double gap_pp = 100.0 * std::abs(lars_acc - best_acc);
    std::string detail = "baseline B=32 test acc % by lr" + baseline + " -> best " + fmt(100 * best_acc) +
                         "; LARS B=1024 (emulated 8x128) " + (rl.diverged ? "diverged" : fmt(100 * lars_acc)) +
                         "; gap " + fmt(gap_pp) + " pp (limit 2); linearly scaled SGD B=1024 lr " +
                         format_double(rp.effective_lr) + ": " +
                         (rp.diverged ? std::string("diverged") : fmt(100 * rp.test_accuracy.value_or(0.0)));
    return {!rl.diverged && gap_pp <= 2.0, detail};
}

// 8. Schedule suite.
Outcome schedule_suite() {
    std::vector<std::string> failed;
    auto check = [&](bool ok, const std::string& what) {
        if (!ok) failed.push_back(what);
    };
    OptimizerConfig cfg;
    cfg.base_lr = 0.01;
    cfg.total_steps = 1000;
    cfg.schedule.warmup_steps = 100;
    cfg.schedule.warmup_init_lr = 0.001;
    check(global_lr(cfg, 0) == 0.001, "warm-up start");
    check(global_lr(cfg, 100) == 0.01, "t=W gives base");
    check(global_lr(cfg, 1000) == 0.0, "t=T gives 0");
    for (std::size_t t = 1; t <= 100; ++t) check(global_lr(cfg, t) > global_lr(cfg, t - 1), "warm-up increasing");
    for (std::size_t t = 101; t <= 1000; ++t) check(global_lr(cfg, t) <= global_lr(cfg, t - 1), "decay monotone");
    OptimizerConfig nw;
    nw.base_lr = 0.4;
    nw.total_steps = 100;
    check(global_lr(nw, 0) == 0.4, "W=0 start");
    check(global_lr(nw, 50) == 0.1, "W=0 half-way gives base/4");
    check(global_lr(nw, 100) == 0.0, "W=0 end");
    bool threw = false;
    try {
        global_lr(nw, 101);
    } catch (const std::out_of_range&) {
        threw = true;
    }
    check(threw, "t>T rejected");
    check(linear_scaled_lr(0.02, 512, 4096) == 0.02 * 4096 / 512, "linear scaling");
    std::sort(failed.begin(), failed.end());
    failed.erase(std::unique(failed.begin(), failed.end()), failed.end());
    std::string detail = "warm-up 0.001->0.01 over 100 of 1000 steps, poly(2) to 0";
    for (const auto& f : failed) detail += "; failed: " + f;
    return {failed.empty(), detail};
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 9. Determinism.
Outcome determinism(const fs::path& out) {
    auto make = [&](const std::string& name) {
        ExperimentSpec s;
        s.dataset.blobs = {10, 32, 200, 50, 0.5, 1.0};
        s.model.hidden = {64, 32};
        s.model.batch_norm = true;
        s.optimizer.kind = OptimizerKind::lars;
        s.optimizer.base_lr = 5.0;
        s.optimizer.momentum = 0.9;
        s.optimizer.weight_decay = 0.0005;
        s.optimizer.warmup_epochs = 0.5;
        s.batch_size = 128;
        s.chunk_size = 32;
        s.epochs = 3;
        s.seed = 42;
        s.output_dir = (out / name).string();
        return s;
    };
    const auto a = run_experiment(make("a"));
    const auto b = run_experiment(make("b"));
    std::vector<std::string> differing;
    for (const char* f : {"steps.csv", "norms.csv", "loss_gap.csv", "model.json", "optimizer.json"})
        if (read_file(a.output_dir / f) != read_file(b.output_dir / f)) differing.push_back(f);
    auto strip = [](const fs::path& p) {
        auto j = nlohmann::json::parse(read_file(p));
        j["result"].erase("wall_seconds");
        j["result"].erase("metric_files");
        j["spec"].erase("output_dir");
        return j;
    };
    if (strip(a.output_dir / "run.json") != strip(b.output_dir / "run.json")) differing.push_back("run.json");
    const double loss_gap = std::abs(a.train_loss - b.train_loss);
    std::string detail = "final train loss " + format_double(a.train_loss) + " vs " + format_double(b.train_loss) +
                         "; metric files " + (differing.empty() ? "identical" : "differ:");
    for (const auto& d : differing) detail += " " + d;
    return {!a.diverged && loss_gap <= 1e-12 && differing.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_runs");
    fs::remove_all(out);
    fs::create_directories(out);

    run("gradient-scale invariance", 1.0, scale_invariance);
    run("update-norm bound", 1.0, update_norm_bound);
    run("gradient oracle", 30.0, gradient_oracle);
    run("linear-scaling exactness", 1.0, linear_scaling);
    run("accumulation equivalence", 10.0, accumulation);
    run("norm-ratio spread at iteration 1", 5.0, norm_ratio_spread);
    run("desk-scale scaling study", 300.0, [&] { return scaling_study(out / "scaling"); });
    run("schedule suite", 1.0, schedule_suite);
    run("determinism", 120.0, [&] { return determinism(out / "determinism"); });

    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
    return failures == 0 ? 0 : 1;
}
