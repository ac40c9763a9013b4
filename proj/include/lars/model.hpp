#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lars/layers.hpp"
#include "lars/rng.hpp"
#include "lars/tensor.hpp"

namespace lars {

enum class ParamKind { weight, bias, bn_scale, bn_shift };

std::string_view to_string(ParamKind kind);
ParamKind param_kind_from_string(std::string_view s);

// One named parameter tensor: the unit LARS adapts its rate for.
struct ParamGroup {
    ParamGroup(std::string name, ParamKind kind, Tensor value);

    std::string name;
    ParamKind kind;
    Tensor value;
    Tensor grad;
    Tensor momentum_buf;
    bool apply_weight_decay = true;
    bool apply_lars = true;
};

struct Batch {
    Tensor inputs;            // [B x d_in]
    std::vector<int> labels;  // B entries in [0, classes)

    std::size_t size() const { return labels.size(); }
};

// Checks B >= 1, one label per row, and labels in [0, classes).
void validate_batch(const Batch& batch, std::size_t input_dim, std::size_t classes);

struct Topology {
    std::size_t input_dim = 784;
    std::vector<std::size_t> hidden{256, 128};
    std::size_t num_classes = 10;
    bool batch_norm = false;

    friend bool operator==(const Topology&, const Topology&) = default;
};

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

// Multi-layer perceptron: [dense -> (bn) -> relu]* -> dense -> softmax CE.
// Dense layers that feed a batch-norm layer carry no bias, since the
// normalisation cancels any per-feature shift.
class Model {
public:
    struct Dense {
        std::size_t weight;
        std::ptrdiff_t bias;  // group index, or -1
    };
    struct Relu {};
    struct BatchNorm {
        std::size_t gamma;
        std::size_t beta;
        RunningStats running;
    };
    using Layer = std::variant<Dense, Relu, BatchNorm>;

    // Weights ~ N(0, 1/fan_in), biases 0, gamma 1, beta 0.
    static Model mlp(const Topology& topology, Rng& rng);

    const Topology& topology() const noexcept { return topology_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    std::vector<Layer>& layers() noexcept { return layers_; }

    std::span<ParamGroup> groups() noexcept { return groups_; }
    std::span<const ParamGroup> groups() const noexcept { return groups_; }
    ParamGroup& group(std::string_view name);
    const ParamGroup& group(std::string_view name) const;

    bool training() const noexcept { return mode_ == Mode::training; }
    Mode mode() const noexcept { return mode_; }
    void set_mode(Mode mode) noexcept { mode_ = mode; }

    // Forward + backward in the current mode. Overwrites every group's grad
    // with the batch-mean gradient; parameter values are untouched. In
    // training mode, batch-norm running statistics are updated.
    EvalResult forward_backward(const Batch& batch);

    // Forward only; leaves parameters, gradients and running statistics
    // untouched. `relu_signs`, when given, receives relu_pattern().
    EvalResult evaluate(const Batch& batch, std::vector<bool>* relu_signs = nullptr) const;
    Tensor logits(const Tensor& inputs) const;

    // Sign pattern (pre-activation > 0) of every ReLU input, concatenated.
    std::vector<bool> relu_pattern(const Tensor& inputs) const;

    void zero_grads();
    std::size_t parameter_count() const;

private:
    Model() = default;

    struct Trace {
        std::vector<Tensor> layer_inputs;
        std::vector<std::optional<BatchNormCache>> bn_caches;
        std::vector<bool> relu_signs;
    };

    // `running_update`, when given, holds one entry per batch-norm layer and
    // receives the updated running statistics (training mode only).
    Tensor forward(const Tensor& inputs, std::vector<RunningStats>* running_update, Trace* trace) const;

    Topology topology_;
    std::vector<Layer> layers_;
    std::vector<ParamGroup> groups_;
    Mode mode_ = Mode::training;
};

EvalResult model_forward_backward(Model& model, const Batch& batch);

}  // namespace lars
