#pragma once

#include <cstddef>
#include <filesystem>

#include "lars/model.hpp"
#include "lars/optimizer.hpp"

namespace lars {

// Model checkpoint: a JSON document
//   {"format": "lars.model", "version": 1,
//    "topology": {"input_dim", "hidden", "num_classes", "batch_norm"},
//    "groups": [{"name", "kind", "shape", "apply_weight_decay", "apply_lars",
//                "value": [...], "grad": [...]}],
//    "batch_norm": [{"layer", "running_mean", "running_var"}]}
// Tensors are flat row-major arrays; doubles round-trip exactly.
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

// Optimizer state checkpoint:
//   {"format": "lars.optimizer", "version": 1, "step": t,
//    "momentum": [{"name", "shape", "values": [...]}]}
void save_optimizer_state(const std::filesystem::path& path, const Model& model, std::size_t step);
// Restores momentum buffers into the matching groups and returns the step.
std::size_t load_optimizer_state(const std::filesystem::path& path, Model& model);

}  // namespace lars
