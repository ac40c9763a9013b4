#include "lars/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "lars/errors.hpp"

namespace lars {

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.rank() != 2 || w.rank() != 2 || b.rank() != 1)
        throw ShapeError("dense_forward: expected x[B x n], W[n x m], b[m]");
    if (x.cols() != w.rows() || b.size() != w.cols())
        throw ShapeError("dense_forward: x " + shape_to_string(x.shape()) + ", W " + shape_to_string(w.shape()) +
                         ", b " + shape_to_string(b.shape()) + " do not conform");
    Tensor y = matmul(x, w);
    const std::size_t m = w.cols();
    for (std::size_t r = 0; r < y.rows(); ++r)
        for (std::size_t j = 0; j < m; ++j) y.at(r, j) += b[j];
    return y;
}

DenseGrads dense_backward(const Tensor& dy, const Tensor& x, const Tensor& w) {
    if (dy.rank() != 2 || x.rank() != 2 || w.rank() != 2)
        throw ShapeError("dense_backward: expected matrices");
    if (x.rows() != dy.rows() || x.cols() != w.rows() || dy.cols() != w.cols())
        throw ShapeError("dense_backward: dy " + shape_to_string(dy.shape()) + ", x " + shape_to_string(x.shape()) +
                         ", W " + shape_to_string(w.shape()) + " do not conform");
    DenseGrads g{matmul(dy, transpose(w)), matmul(transpose(x), dy), Tensor({w.cols()})};
    for (std::size_t r = 0; r < dy.rows(); ++r)
        for (std::size_t j = 0; j < dy.cols(); ++j) g.db[j] += dy.at(r, j);
    return g;
}

Tensor relu_forward(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& dy, const Tensor& x) {
    require_same_shape(dy, x, "relu_backward");
    Tensor dx(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
    return dx;
}

BatchNormOutput batchnorm_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta, Mode mode,
                                  RunningStats* running, const BatchNormParams& params) {
    if (x.rank() != 2) throw ShapeError("batchnorm_forward: expected x[B x n]");
    const std::size_t batch = x.rows(), n = x.cols();
    if (gamma.shape() != Shape{n} || beta.shape() != Shape{n})
        throw ShapeError("batchnorm_forward: gamma/beta must have shape [" + std::to_string(n) + "]");

    BatchNormOutput out{Tensor(x.shape()), std::nullopt};
    if (mode == Mode::inference) {
        if (!running) throw std::logic_error("batchnorm_forward: inference mode needs running statistics");
        for (std::size_t r = 0; r < batch; ++r)
            for (std::size_t j = 0; j < n; ++j) {
                const double inv = 1.0 / std::sqrt(running->var[j] + params.eps);
                out.y.at(r, j) = gamma[j] * (x.at(r, j) - running->mean[j]) * inv + beta[j];
            }
        return out;
    }

    if (batch < 2)
        throw std::invalid_argument("batchnorm_forward: training mode needs a batch of at least 2, got " +
                                    std::to_string(batch));
    const Tensor mean = reduce_mean(x, 0);
    const Tensor var = reduce_var(x, 0);
    BatchNormCache cache{Tensor(x.shape()), Tensor({n}), gamma};
    for (std::size_t j = 0; j < n; ++j) cache.inv_std[j] = 1.0 / std::sqrt(var[j] + params.eps);
    for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t j = 0; j < n; ++j) {
            const double xh = (x.at(r, j) - mean[j]) * cache.inv_std[j];
            cache.x_hat.at(r, j) = xh;
            out.y.at(r, j) = gamma[j] * xh + beta[j];
        }
    if (running) {
        const double m = params.running_momentum;
        for (std::size_t j = 0; j < n; ++j) {
            running->mean[j] = m * running->mean[j] + (1.0 - m) * mean[j];
            running->var[j] = m * running->var[j] + (1.0 - m) * var[j];
        }
    }
    out.cache = std::move(cache);
    return out;
}

BatchNormGrads batchnorm_backward(const Tensor& dy, const std::optional<BatchNormCache>& cache) {
    if (!cache) throw std::logic_error("batchnorm_backward: no forward cache (was forward run in training mode?)");
    const auto& c = *cache;
    require_same_shape(dy, c.x_hat, "batchnorm_backward");
    const std::size_t batch = dy.rows(), n = dy.cols();
    const double inv_b = 1.0 / static_cast<double>(batch);

    BatchNormGrads g{Tensor(dy.shape()), Tensor({n}), Tensor({n})};
    // Per feature: dx = inv_std / B * (B * dxh - sum(dxh) - x_hat * sum(dxh * x_hat)), dxh = dy * gamma.
    Tensor sum_dxh({n}), sum_dxh_xh({n});
    for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t j = 0; j < n; ++j) {
            const double d = dy.at(r, j);
            const double xh = c.x_hat.at(r, j);
            g.dbeta[j] += d;
            g.dgamma[j] += d * xh;
            sum_dxh[j] += d * c.gamma[j];
            sum_dxh_xh[j] += d * c.gamma[j] * xh;
        }
    for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t j = 0; j < n; ++j) {
            const double dxh = dy.at(r, j) * c.gamma[j];
            g.dx.at(r, j) = c.inv_std[j] * inv_b *
                            (static_cast<double>(batch) * dxh - sum_dxh[j] - c.x_hat.at(r, j) * sum_dxh_xh[j]);
        }
    return g;
}

namespace {

void check_labels(const Tensor& logits, std::span<const int> labels, const char* op) {
    if (logits.rank() != 2) throw ShapeError(std::string(op) + ": expected logits[B x C]");
    if (labels.size() != logits.rows())
        throw ShapeError(std::string(op) + ": " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(logits.rows()) + " rows");
    const int classes = static_cast<int>(logits.cols());
    for (int l : labels)
        if (l < 0 || l >= classes)
            throw std::invalid_argument(std::string(op) + ": label " + std::to_string(l) + " outside [0, " +
                                        std::to_string(classes) + ")");
}

}  // namespace

LossAndGrad softmax_ce_loss(const Tensor& logits, std::span<const int> labels) {
    check_labels(logits, labels, "softmax_ce_loss");
    const std::size_t batch = logits.rows(), classes = logits.cols();
    const double inv_b = 1.0 / static_cast<double>(batch);
    LossAndGrad out{0.0, Tensor(logits.shape())};
    for (std::size_t r = 0; r < batch; ++r) {
        double mx = logits.at(r, 0);
        for (std::size_t j = 1; j < classes; ++j) mx = std::max(mx, logits.at(r, j));
        double z = 0.0;
        for (std::size_t j = 0; j < classes; ++j) z += std::exp(logits.at(r, j) - mx);
        const double log_z = std::log(z);
        const auto label = static_cast<std::size_t>(labels[r]);
        out.loss += -(logits.at(r, label) - mx - log_z);
        for (std::size_t j = 0; j < classes; ++j) {
            const double p = std::exp(logits.at(r, j) - mx - log_z);
            out.dlogits.at(r, j) = (p - (j == label ? 1.0 : 0.0)) * inv_b;
        }
    }
    out.loss *= inv_b;
    return out;
}

double accuracy(const Tensor& logits, std::span<const int> labels) {
    check_labels(logits, labels, "accuracy");
    std::size_t correct = 0;
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < logits.cols(); ++j)
            if (logits.at(r, j) > logits.at(r, best)) best = j;
        if (static_cast<int>(best) == labels[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

}  // namespace lars
