#include "lars/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "lars/errors.hpp"

namespace lars {

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    return std::abs(analytic - numeric) / denom;
}

namespace {

double checked_loss(double v) {
    if (!std::isfinite(v)) throw OracleError("finite difference oracle: loss is not finite");
    return v;
}

std::vector<std::size_t> coordinates(std::size_t n, std::size_t max_coords) {
    std::vector<std::size_t> idx;
    if (max_coords == 0 || n <= max_coords) {
        idx.resize(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        return idx;
    }
    for (std::size_t k = 0; k < max_coords; ++k) idx.push_back(k * n / max_coords);
    return idx;
}

// Groups at or before the last batch-norm layer see its Jacobian.
std::vector<bool> through_batch_norm(const Model& model) {
    std::vector<bool> flags(model.groups().size(), false);
    const auto& layers = model.layers();
    std::ptrdiff_t last_bn = -1;
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (std::holds_alternative<Model::BatchNorm>(layers[i])) last_bn = static_cast<std::ptrdiff_t>(i);
    for (std::ptrdiff_t i = 0; i <= last_bn; ++i) {
        const auto& layer = layers[static_cast<std::size_t>(i)];
        if (const auto* d = std::get_if<Model::Dense>(&layer)) {
            flags[d->weight] = true;
            if (d->bias >= 0) flags[static_cast<std::size_t>(d->bias)] = true;
        } else if (const auto* bn = std::get_if<Model::BatchNorm>(&layer)) {
            flags[bn->gamma] = true;
            flags[bn->beta] = true;
        }
    }
    return flags;
}

}  // namespace

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& loss_fn, const Tensor& params, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: step must be positive");
    Tensor w = params;
    Tensor grad = Tensor::zeros_like(params);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double orig = w[i];
        w[i] = orig + h;
        const double up = checked_loss(loss_fn(w));
        w[i] = orig - h;
        const double down = checked_loss(loss_fn(w));
        w[i] = orig;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

std::vector<GradCheckReport> check_gradients(const Model& model, const Batch& batch,
                                             const std::vector<Tensor>& analytic,
                                             const GradCheckThresholds& thresholds) {
    if (analytic.size() != model.groups().size())
        throw std::invalid_argument("check_gradients: one analytic gradient per group required");
    if (!(thresholds.step > 0.0)) throw std::invalid_argument("check_gradients: step must be positive");

    Model work = model;
    const auto bn_flags = through_batch_norm(work);
    std::vector<bool> base_pattern;
    work.evaluate(batch, &base_pattern);

    const double h = thresholds.step;
    std::vector<GradCheckReport> reports;
    std::vector<bool> pattern;
    auto groups = work.groups();
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        auto& g = groups[gi];
        require_same_shape(analytic[gi], g.value, "check_gradients");
        GradCheckReport rep;
        rep.group = g.name;
        rep.threshold = bn_flags[gi] ? thresholds.batch_norm : thresholds.smooth;

        for (std::size_t i : coordinates(g.value.size(), thresholds.max_coords_per_group)) {
            const double orig = g.value[i];
            g.value[i] = orig + h;
            const double up = checked_loss(work.evaluate(batch, &pattern).loss);
            bool kink = pattern != base_pattern;
            g.value[i] = orig - h;
            const double down = checked_loss(work.evaluate(batch, &pattern).loss);
            kink = kink || pattern != base_pattern;
            g.value[i] = orig;
            if (kink) {
                ++rep.skipped_kinks;
                continue;
            }
            const double err = relative_error(analytic[gi][i], (up - down) / (2.0 * h));
            ++rep.checked;
            if (rep.checked == 1 || err > rep.max_relative_error) {
                rep.max_relative_error = err;
                rep.worst_index = i;
            }
        }
        rep.pass = rep.max_relative_error < rep.threshold;
        reports.push_back(std::move(rep));
    }
    return reports;
}

std::vector<GradCheckReport> check_model(const Model& model, const Batch& batch,
                                         const GradCheckThresholds& thresholds) {
    Model work = model;
    work.forward_backward(batch);
    std::vector<Tensor> analytic;
    for (const auto& g : work.groups()) analytic.push_back(g.grad);
    return check_gradients(model, batch, analytic, thresholds);
}

void write_gradcheck_report(const std::filesystem::path& path, const std::vector<GradCheckReport>& reports) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : reports)
        j.push_back({{"group", r.group},
                     {"max_relative_error", r.max_relative_error},
                     {"worst_index", r.worst_index},
                     {"checked", r.checked},
                     {"skipped_kinks", r.skipped_kinks},
                     {"threshold", r.threshold},
                     {"pass", r.pass}});
    std::ofstream out(path);
    if (!out) throw SinkError("cannot write gradcheck report to " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw SinkError("failed writing gradcheck report to " + path.string());
}

}  // namespace lars
