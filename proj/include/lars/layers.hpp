#pragma once

#include <optional>
#include <span>
#include <vector>

#include "lars/tensor.hpp"

namespace lars {

enum class Mode { training, inference };

// Fully connected layer: y = x W + b, with b broadcast over rows.
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b);

struct DenseGrads {
    Tensor dx;
    Tensor dw;
    Tensor db;
};
DenseGrads dense_backward(const Tensor& dy, const Tensor& x, const Tensor& w);

Tensor relu_forward(const Tensor& x);
// Subgradient 0 at x == 0.
Tensor relu_backward(const Tensor& dy, const Tensor& x);

struct RunningStats {
    Tensor mean;
    Tensor var;
};

struct BatchNormParams {
    double eps = 1e-5;
    // Weight kept on the old running value: running = m * running + (1 - m) * batch.
    double running_momentum = 0.9;
};

struct BatchNormCache {
    Tensor x_hat;
    Tensor inv_std;
    Tensor gamma;
};

struct BatchNormOutput {
    Tensor y;
    std::optional<BatchNormCache> cache;  // present in training mode only
};

// Training mode normalises with the batch mean and population variance and,
// when `running` is non-null, folds them into the running statistics.
// Inference mode normalises with `running`, which must then be provided.
BatchNormOutput batchnorm_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta, Mode mode,
                                  RunningStats* running, const BatchNormParams& params = {});

struct BatchNormGrads {
    Tensor dx;
    Tensor dgamma;
    Tensor dbeta;
};
BatchNormGrads batchnorm_backward(const Tensor& dy, const std::optional<BatchNormCache>& cache);

struct LossAndGrad {
    double loss;
    Tensor dlogits;
};
// Mean softmax cross-entropy over the batch; dlogits = (softmax - onehot) / B.
LossAndGrad softmax_ce_loss(const Tensor& logits, std::span<const int> labels);

// Fraction of rows whose arg-max (first on ties) equals the label.
double accuracy(const Tensor& logits, std::span<const int> labels);

}  // namespace lars
