#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lars/model.hpp"
#include "lars/tensor.hpp"

namespace lars {

// The loss under test returned a non-finite value.
class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

// Central differences (f(w + h e_i) - f(w - h e_i)) / 2h for every coordinate.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& loss_fn, const Tensor& params, double h = 1e-5);

struct GradCheckThresholds {
    double smooth = 1e-5;      // dense, ReLU, loss
    double batch_norm = 1e-4;  // groups whose gradient flows through batch norm
    double step = 1e-5;
    // Evenly spaced subset of coordinates per group; 0 checks all.
    std::size_t max_coords_per_group = 0;
};

struct GradCheckReport {
    std::string group;
    double max_relative_error = 0.0;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
    std::size_t skipped_kinks = 0;
    double threshold = 0.0;
    bool pass = true;
};

// Compares the model's analytic gradients on `batch` against central
// differences of the batch loss. Works on a private copy, so the caller's
// model is left bitwise unchanged. Coordinates whose perturbation flips any
// ReLU input sign are skipped. Failures are reported, not thrown.
std::vector<GradCheckReport> check_model(const Model& model, const Batch& batch,
                                         const GradCheckThresholds& thresholds = {});

// As check_model, but against caller-supplied analytic gradients (one per
// group, in group order).
std::vector<GradCheckReport> check_gradients(const Model& model, const Batch& batch,
                                             const std::vector<Tensor>& analytic,
                                             const GradCheckThresholds& thresholds = {});

void write_gradcheck_report(const std::filesystem::path& path, const std::vector<GradCheckReport>& reports);

}  // namespace lars
