#include "lars/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lars/errors.hpp"

namespace lars {

std::string_view to_string(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::sgd: return "sgd";
        case OptimizerKind::sgd_momentum: return "sgd_momentum";
        case OptimizerKind::lars: return "lars";
    }
    return "unknown";
}

OptimizerKind optimizer_kind_from_string(std::string_view s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "sgd_momentum") return OptimizerKind::sgd_momentum;
    if (s == "lars") return OptimizerKind::lars;
    throw std::invalid_argument("unknown optimizer kind '" + std::string(s) + "'");
}

std::string_view to_string(DecayKind kind) {
    return kind == DecayKind::constant ? "constant" : "polynomial";
}

DecayKind decay_kind_from_string(std::string_view s) {
    if (s == "constant") return DecayKind::constant;
    if (s == "polynomial") return DecayKind::polynomial;
    throw std::invalid_argument("unknown decay policy '" + std::string(s) + "'");
}

void OptimizerConfig::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
    if (!(base_lr > 0.0) || !std::isfinite(base_lr)) fail("base_lr must be positive and finite");
    if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) fail("weight_decay must be non-negative");
    if (!(trust_coeff > 0.0) || !std::isfinite(trust_coeff)) fail("trust_coeff must be positive");
    if (!(max_local_lr > 0.0)) fail("max_local_lr must be positive");
    if (total_steps == 0) fail("total_steps must be positive");
    if (accum_factor == 0) fail("accum_factor must be at least 1");
    if (schedule.warmup_steps >= total_steps) fail("warmup_steps must be smaller than total_steps");
    if (schedule.warmup_steps > 0) {
        if (!(schedule.warmup_init_lr > 0.0)) fail("warmup_init_lr must be positive");
        if (schedule.warmup_init_lr > base_lr) fail("warmup_init_lr must not exceed base_lr");
    }
    if (schedule.decay == DecayKind::polynomial && !(schedule.power > 0.0)) fail("decay power must be positive");
}

double global_lr(const OptimizerConfig& cfg, std::size_t t) {
    const std::size_t total = cfg.total_steps;
    if (t > total)
        throw std::out_of_range("global_lr: step " + std::to_string(t) + " beyond horizon " + std::to_string(total));
    const auto& s = cfg.schedule;
    if (t < s.warmup_steps) {
        const double frac = static_cast<double>(t) / static_cast<double>(s.warmup_steps);
        return s.warmup_init_lr + (cfg.base_lr - s.warmup_init_lr) * frac;
    }
    if (s.decay == DecayKind::constant) return cfg.base_lr;
    const double remaining = static_cast<double>(t - s.warmup_steps) / static_cast<double>(total - s.warmup_steps);
    return cfg.base_lr * std::pow(1.0 - remaining, s.power);
}

double linear_scaled_lr(double base_lr, std::size_t base_batch, std::size_t new_batch) {
    if (base_batch == 0 || new_batch == 0) throw std::invalid_argument("linear_scaled_lr: batch sizes must be positive");
    return base_lr * static_cast<double>(new_batch) / static_cast<double>(base_batch);
}

double local_lr(double w_norm, double g_norm, double eta, double beta) {
    if (w_norm < 0.0 || g_norm < 0.0 || beta < 0.0)
        throw std::invalid_argument("local_lr: norms and weight decay must be non-negative");
    if (!(eta > 0.0)) throw std::invalid_argument("local_lr: trust coefficient must be positive");
    const double denom = g_norm + beta * w_norm;
    if (w_norm == 0.0 || denom == 0.0) return 1.0;
    return eta * w_norm / denom;
}

namespace {

void check_finite(double v, const ParamGroup& g, const char* what) {
    if (!std::isfinite(v))
        throw DivergenceError("non-finite " + std::string(what) + " in group '" + g.name + "'", g.name);
}

// v <- m v + coeff (g + beta w);  w <- w - v. Returns |v|.
double apply_update(ParamGroup& g, double coeff, double momentum, double beta) {
    auto w = g.value.data();
    auto grad = g.grad.data();
    auto v = g.momentum_buf.data();
    double sq = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        v[i] = momentum * v[i] + coeff * (grad[i] + beta * w[i]);
        w[i] -= v[i];
        sq += v[i] * v[i];
    }
    return std::sqrt(sq);
}

void require_state_shapes(const ParamGroup& g) {
    if (g.grad.shape() != g.value.shape() || g.momentum_buf.shape() != g.value.shape())
        throw ShapeError("group '" + g.name + "': value, grad and momentum shapes differ");
}

StepReport run_step(std::span<ParamGroup> groups, const OptimizerConfig& cfg, std::size_t t, bool layer_wise,
                    double momentum) {
    StepReport report{t, global_lr(cfg, t), {}};
    report.groups.reserve(groups.size());
    for (auto& g : groups) {
        require_state_shapes(g);
        GroupStepRecord rec;
        rec.name = g.name;
        rec.w_norm = l2_norm(g.value);
        rec.g_norm = l2_norm(g.grad);
        check_finite(rec.w_norm, g, "weight norm");
        check_finite(rec.g_norm, g, "gradient norm");

        const double beta = g.apply_weight_decay ? cfg.weight_decay : 0.0;
        const double denom = rec.g_norm + beta * rec.w_norm;
        if (rec.w_norm > 0.0 && denom > 0.0) rec.trust_ratio = rec.w_norm / denom;

        rec.local_lr = 1.0;
        if (layer_wise && g.apply_lars) {
            rec.local_lr = std::min(local_lr(rec.w_norm, rec.g_norm, cfg.trust_coeff, beta), cfg.max_local_lr);
        }
        rec.update_norm = apply_update(g, report.global_lr * rec.local_lr, momentum, beta);
        check_finite(rec.update_norm, g, "update");
        report.groups.push_back(std::move(rec));
    }
    return report;
}

}  // namespace

StepReport lars_step(std::span<ParamGroup> groups, const OptimizerConfig& cfg, std::size_t t) {
    return run_step(groups, cfg, t, true, cfg.momentum);
}

StepReport sgd_step(std::span<ParamGroup> groups, const OptimizerConfig& cfg, std::size_t t) {
    const double m = cfg.kind == OptimizerKind::sgd ? 0.0 : cfg.momentum;
    return run_step(groups, cfg, t, false, m);
}

Optimizer::Optimizer(OptimizerConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

StepReport Optimizer::step(std::span<ParamGroup> groups) {
    if (t_ >= cfg_.total_steps)
        throw std::out_of_range("optimizer already took all " + std::to_string(cfg_.total_steps) + " steps");
    StepReport r = cfg_.kind == OptimizerKind::lars ? lars_step(groups, cfg_, t_) : sgd_step(groups, cfg_, t_);
    ++t_;
    return r;
}

EvalResult accumulate_gradients(Model& model, std::span<const Batch> chunks) {
    if (chunks.empty()) throw std::invalid_argument("accumulate_gradients: no chunks");
    const std::size_t chunk_size = chunks.front().size();
    for (const auto& c : chunks)
        if (c.size() != chunk_size || chunk_size == 0)
            throw std::invalid_argument("accumulate_gradients: chunks must be non-empty and of equal size");

    if (chunks.size() == 1) return model.forward_backward(chunks.front());

    std::vector<Tensor> sums;
    EvalResult total;
    for (std::size_t c = 0; c < chunks.size(); ++c) {
        const EvalResult r = model.forward_backward(chunks[c]);
        total.loss += r.loss;
        total.accuracy += r.accuracy;
        auto groups = model.groups();
        if (c == 0) {
            for (const auto& g : groups) sums.push_back(g.grad);
        } else {
            for (std::size_t i = 0; i < groups.size(); ++i) axpy_inplace(1.0, groups[i].grad, sums[i]);
        }
    }
    const double inv_k = 1.0 / static_cast<double>(chunks.size());
    auto groups = model.groups();
    for (std::size_t i = 0; i < groups.size(); ++i) groups[i].grad = scale(sums[i], inv_k);
    total.loss *= inv_k;
    total.accuracy *= inv_k;
    return total;
}

std::vector<Batch> split_batch(const Batch& batch, std::size_t chunks) {
    if (chunks == 0 || batch.size() % chunks != 0)
        throw std::invalid_argument("split_batch: batch of " + std::to_string(batch.size()) +
                                    " does not split into " + std::to_string(chunks) + " equal chunks");
    const std::size_t per = batch.size() / chunks;
    std::vector<Batch> out;
    out.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t begin = c * per;
        out.push_back({slice_rows(batch.inputs, begin, begin + per),
                       std::vector<int>(batch.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                                        batch.labels.begin() + static_cast<std::ptrdiff_t>(begin + per))});
    }
    return out;
}

namespace {

Tensor mean_gradient(const SampleGradient& grad, const Tensor& w, std::size_t begin, std::size_t end) {
    Tensor acc = Tensor::zeros_like(w);
    for (std::size_t i = begin; i < end; ++i) axpy_inplace(1.0, grad(i, w), acc);
    return scale(acc, 1.0 / static_cast<double>(end - begin));
}

}  // namespace

ScalingEndpoints linear_scaling_equivalence_check(const Tensor& w0, const SampleGradient& grad, double lr,
                                                  std::size_t batch) {
    if (batch == 0) throw std::invalid_argument("linear_scaling_equivalence_check: batch must be positive");
    const Tensor w1 = axpy(-lr, mean_gradient(grad, w0, 0, batch), w0);
    const Tensor w2 = axpy(-lr, mean_gradient(grad, w1, batch, 2 * batch), w1);
    const Tensor big = axpy(-2.0 * lr, mean_gradient(grad, w0, 0, 2 * batch), w0);
    return {w2, big};
}

ScalingEndpoints linear_scaling_equivalence_check(const Tensor& w0, const Tensor& g_const, double lr,
                                                  std::size_t batch) {
    require_same_shape(w0, g_const, "linear_scaling_equivalence_check");
    return linear_scaling_equivalence_check(
        w0, [&](std::size_t, const Tensor&) { return g_const; }, lr, batch);
}

}  // namespace lars
