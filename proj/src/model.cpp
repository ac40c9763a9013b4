#include "lars/model.hpp"

#include <cmath>
#include <stdexcept>

#include "lars/errors.hpp"

namespace lars {

std::string_view to_string(ParamKind kind) {
    switch (kind) {
        case ParamKind::weight: return "weight";
        case ParamKind::bias: return "bias";
        case ParamKind::bn_scale: return "bn_scale";
        case ParamKind::bn_shift: return "bn_shift";
    }
    return "unknown";
}

ParamKind param_kind_from_string(std::string_view s) {
    if (s == "weight") return ParamKind::weight;
    if (s == "bias") return ParamKind::bias;
    if (s == "bn_scale") return ParamKind::bn_scale;
    if (s == "bn_shift") return ParamKind::bn_shift;
    throw std::invalid_argument("unknown parameter kind '" + std::string(s) + "'");
}

ParamGroup::ParamGroup(std::string name_, ParamKind kind_, Tensor value_)
    : name(std::move(name_)),
      kind(kind_),
      value(std::move(value_)),
      grad(Tensor::zeros_like(value)),
      momentum_buf(Tensor::zeros_like(value)) {}

void validate_batch(const Batch& batch, std::size_t input_dim, std::size_t classes) {
    if (batch.labels.empty()) throw std::invalid_argument("batch is empty");
    if (batch.inputs.rank() != 2 || batch.inputs.rows() != batch.labels.size() || batch.inputs.cols() != input_dim)
        throw ShapeError("batch inputs " + shape_to_string(batch.inputs.shape()) + " do not match " +
                         std::to_string(batch.labels.size()) + " labels of dimension " + std::to_string(input_dim));
    for (int l : batch.labels)
        if (l < 0 || static_cast<std::size_t>(l) >= classes)
            throw std::invalid_argument("label " + std::to_string(l) + " outside [0, " + std::to_string(classes) +
                                        ")");
}

Model Model::mlp(const Topology& topology, Rng& rng) {
    if (topology.input_dim == 0 || topology.num_classes < 2)
        throw std::invalid_argument("mlp: need input_dim >= 1 and at least 2 classes");
    Model m;
    m.topology_ = topology;

    std::vector<std::size_t> widths{topology.input_dim};
    widths.insert(widths.end(), topology.hidden.begin(), topology.hidden.end());
    widths.push_back(topology.num_classes);

    const std::size_t n_dense = widths.size() - 1;
    for (std::size_t i = 0; i < n_dense; ++i) {
        const std::size_t fan_in = widths[i], fan_out = widths[i + 1];
        if (fan_out == 0) throw std::invalid_argument("mlp: layer widths must be positive");
        const bool last = i + 1 == n_dense;
        const bool bn = topology.batch_norm && !last;
        const std::string dense_name = "dense" + std::to_string(i + 1);

        Dense dense{m.groups_.size(), -1};
        m.groups_.emplace_back(dense_name + ".w", ParamKind::weight,
                               gaussian(rng, {fan_in, fan_out}, 0.0, 1.0 / std::sqrt(static_cast<double>(fan_in))));
        if (!bn) {
            dense.bias = static_cast<std::ptrdiff_t>(m.groups_.size());
            m.groups_.emplace_back(dense_name + ".b", ParamKind::bias, Tensor({fan_out}));
        }
        m.layers_.emplace_back(dense);
        if (last) break;

        if (bn) {
            const std::string bn_name = "bn" + std::to_string(i + 1);
            BatchNorm layer{m.groups_.size(), m.groups_.size() + 1,
                            RunningStats{Tensor({fan_out}), Tensor({fan_out}, 1.0)}};
            m.groups_.emplace_back(bn_name + ".gamma", ParamKind::bn_scale, Tensor({fan_out}, 1.0));
            m.groups_.emplace_back(bn_name + ".beta", ParamKind::bn_shift, Tensor({fan_out}));
            m.layers_.emplace_back(std::move(layer));
        }
        m.layers_.emplace_back(Relu{});
    }
    return m;
}

ParamGroup& Model::group(std::string_view name) {
    for (auto& g : groups_)
        if (g.name == name) return g;
    throw std::out_of_range("no parameter group named '" + std::string(name) + "'");
}

const ParamGroup& Model::group(std::string_view name) const {
    return const_cast<Model*>(this)->group(name);
}

Tensor Model::forward(const Tensor& inputs, std::vector<RunningStats>* running_update, Trace* trace) const {
    Tensor h = inputs;
    std::size_t bn_index = 0;
    if (trace) trace->bn_caches.assign(layers_.size(), std::nullopt);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (trace) trace->layer_inputs.push_back(h);
        const auto& layer = layers_[i];
        if (const auto* d = std::get_if<Dense>(&layer)) {
            const Tensor& w = groups_[d->weight].value;
            h = d->bias >= 0 ? dense_forward(h, w, groups_[static_cast<std::size_t>(d->bias)].value)
                             : matmul(h, w);
        } else if (std::holds_alternative<Relu>(layer)) {
            if (trace)
                for (double v : h.data()) trace->relu_signs.push_back(v > 0.0);
            h = relu_forward(h);
        } else {
            const auto& bn = std::get<BatchNorm>(layer);
            RunningStats scratch = bn.running;
            RunningStats* running = &scratch;
            if (mode_ == Mode::training) running = running_update ? &(*running_update)[bn_index] : nullptr;
            auto out = batchnorm_forward(h, groups_[bn.gamma].value, groups_[bn.beta].value, mode_, running);
            if (trace) trace->bn_caches[i] = std::move(out.cache);
            h = std::move(out.y);
            ++bn_index;
        }
    }
    return h;
}

EvalResult Model::forward_backward(const Batch& batch) {
    validate_batch(batch, topology_.input_dim, topology_.num_classes);

    std::vector<RunningStats> running;
    for (const auto& layer : layers_)
        if (const auto* bn = std::get_if<BatchNorm>(&layer)) running.push_back(bn->running);

    Trace trace;
    const Tensor logits = forward(batch.inputs, &running, &trace);
    auto [loss, grad] = softmax_ce_loss(logits, batch.labels);
    const double acc = accuracy(logits, batch.labels);

    for (std::size_t i = layers_.size(); i-- > 0;) {
        const Tensor& x = trace.layer_inputs[i];
        auto& layer = layers_[i];
        if (auto* d = std::get_if<Dense>(&layer)) {
            auto g = dense_backward(grad, x, groups_[d->weight].value);
            groups_[d->weight].grad = std::move(g.dw);
            if (d->bias >= 0) groups_[static_cast<std::size_t>(d->bias)].grad = std::move(g.db);
            grad = std::move(g.dx);
        } else if (std::holds_alternative<Relu>(layer)) {
            grad = relu_backward(grad, x);
        } else {
            auto& bn = std::get<BatchNorm>(layer);
            auto g = batchnorm_backward(grad, trace.bn_caches[i]);
            groups_[bn.gamma].grad = std::move(g.dgamma);
            groups_[bn.beta].grad = std::move(g.dbeta);
            grad = std::move(g.dx);
        }
    }

    if (mode_ == Mode::training) {
        std::size_t k = 0;
        for (auto& layer : layers_)
            if (auto* bn = std::get_if<BatchNorm>(&layer)) bn->running = std::move(running[k++]);
    }
    return {loss, acc};
}

EvalResult Model::evaluate(const Batch& batch, std::vector<bool>* relu_signs) const {
    validate_batch(batch, topology_.input_dim, topology_.num_classes);
    Tensor out;
    if (relu_signs) {
        Trace trace;
        out = forward(batch.inputs, nullptr, &trace);
        *relu_signs = std::move(trace.relu_signs);
    } else {
        out = logits(batch.inputs);
    }
    return {softmax_ce_loss(out, batch.labels).loss, accuracy(out, batch.labels)};
}

Tensor Model::logits(const Tensor& inputs) const { return forward(inputs, nullptr, nullptr); }

std::vector<bool> Model::relu_pattern(const Tensor& inputs) const {
    Trace trace;
    forward(inputs, nullptr, &trace);
    return std::move(trace.relu_signs);
}

void Model::zero_grads() {
    for (auto& g : groups_) g.grad.fill(0.0);
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto& g : groups_) n += g.value.size();
    return n;
}

EvalResult model_forward_backward(Model& model, const Batch& batch) { return model.forward_backward(batch); }

}  // namespace lars
