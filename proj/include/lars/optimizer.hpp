#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lars/model.hpp"
#include "lars/tensor.hpp"

namespace lars {

enum class OptimizerKind { sgd, sgd_momentum, lars };
enum class DecayKind { constant, polynomial };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(std::string_view s);
std::string_view to_string(DecayKind kind);
DecayKind decay_kind_from_string(std::string_view s);

struct ScheduleSpec {
    std::size_t warmup_steps = 0;
    double warmup_init_lr = 0.001;
    DecayKind decay = DecayKind::polynomial;
    double power = 2.0;

    friend bool operator==(const ScheduleSpec&, const ScheduleSpec&) = default;
};

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::sgd;
    double base_lr = 0.01;
    double momentum = 0.0;
    double weight_decay = 0.0;
    double trust_coeff = 0.001;
    // Upper bound applied to every local rate; infinity disables clamping.
    double max_local_lr = std::numeric_limits<double>::infinity();
    ScheduleSpec schedule;
    std::size_t total_steps = 1;
    std::size_t accum_factor = 1;

    // Throws std::invalid_argument naming the offending field.
    void validate() const;

    friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

// Linear warm-up from warmup_init_lr to base_lr over the first W steps, then
// the decay policy over the remaining T - W steps. Defined for 0 <= t <= T
// (t == T is the end of the horizon, where polynomial decay reaches 0).
double global_lr(const OptimizerConfig& cfg, std::size_t t);

// base_lr * new_batch / base_batch.
double linear_scaled_lr(double base_lr, std::size_t base_batch, std::size_t new_batch);

// eta * w_norm / (g_norm + beta * w_norm); 1.0 when w_norm or the
// denominator is zero.
double local_lr(double w_norm, double g_norm, double eta, double beta);

struct GroupStepRecord {
    std::string name;
    double w_norm = 0.0;
    double g_norm = 0.0;
    // w_norm / (g_norm + beta_eff * w_norm); absent where undefined.
    std::optional<double> trust_ratio;
    double local_lr = 1.0;
    double update_norm = 0.0;
};

struct StepReport {
    std::size_t step = 0;
    double global_lr = 0.0;
    std::vector<GroupStepRecord> groups;
};

// One LARS update over every group:
//   lambda = local_lr(|w|, |g|, eta, beta_eff)   (1 when apply_lars is off)
//   v <- m v + gamma_t lambda (g + beta_eff w);  w <- w - v
// beta_eff is the weight decay, or 0 for groups with apply_weight_decay off.
// Throws DivergenceError naming the group on any non-finite norm.
StepReport lars_step(std::span<ParamGroup> groups, const OptimizerConfig& cfg, std::size_t t);

// v <- m v + gamma_t (g + beta_eff w);  w <- w - v. Momentum is forced to 0
// for OptimizerKind::sgd.
StepReport sgd_step(std::span<ParamGroup> groups, const OptimizerConfig& cfg, std::size_t t);

// Owns the step counter; dispatches on cfg.kind.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig cfg);

    StepReport step(std::span<ParamGroup> groups);

    const OptimizerConfig& config() const noexcept { return cfg_; }
    std::size_t step_count() const noexcept { return t_; }
    void set_step_count(std::size_t t) noexcept { t_ = t; }

private:
    OptimizerConfig cfg_;
    std::size_t t_ = 0;
};

// Runs forward/backward on each chunk in ascending order and leaves the mean
// gradient over all samples in every group. Chunks must be non-empty and of
// equal size. Returns the sample-mean loss and accuracy.
EvalResult accumulate_gradients(Model& model, std::span<const Batch> chunks);

// Splits a batch into `chunks` contiguous equal pieces.
std::vector<Batch> split_batch(const Batch& batch, std::size_t chunks);

struct ScalingEndpoints {
    Tensor two_small_steps;
    Tensor one_large_step;
};

// Gradient of sample `i`'s loss at w.
using SampleGradient = std::function<Tensor(std::size_t sample, const Tensor& w)>;

// From w0: two plain SGD steps at (batch, lr), the first over samples
// [0, batch) and the second over [batch, 2 batch), versus one step at
// (2 batch, 2 lr) over all 2 batch samples.
ScalingEndpoints linear_scaling_equivalence_check(const Tensor& w0, const SampleGradient& grad, double lr,
                                                  std::size_t batch);
// Constant-gradient objective: every sample's gradient is g_const.
ScalingEndpoints linear_scaling_equivalence_check(const Tensor& w0, const Tensor& g_const, double lr,
                                                  std::size_t batch);

}  // namespace lars
