#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lars/dataset.hpp"
#include "lars/diagnostics.hpp"
#include "lars/model.hpp"
#include "lars/optimizer.hpp"

namespace lars {

// Environment variable consulted when a spec leaves output_dir empty.
inline constexpr const char* kOutputDirEnv = "LARS_OUTPUT_DIR";

struct DatasetSpec {
    enum class Kind { synthetic_blobs, idx };
    Kind kind = Kind::synthetic_blobs;
    BlobParams blobs;
    std::string train_images, train_labels, test_images, test_labels;
    std::size_t num_classes = 10;

    friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

struct ModelSpec {
    std::vector<std::size_t> hidden{256, 128};
    bool batch_norm = false;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

enum class LrScaling { none, linear };

struct OptimizerSpec {
    OptimizerKind kind = OptimizerKind::sgd;
    double base_lr = 0.01;
    double momentum = 0.0;
    double weight_decay = 0.0;
    double trust_coeff = 0.001;
    double max_local_lr = std::numeric_limits<double>::infinity();
    double warmup_epochs = 0.0;
    double warmup_init_lr = 0.001;
    DecayKind decay = DecayKind::polynomial;
    double power = 2.0;
    // linear: base_lr is the rate for baseline_batch, scaled to batch_size.
    LrScaling lr_scaling = LrScaling::none;

    friend bool operator==(const OptimizerSpec&, const OptimizerSpec&) = default;
};

struct ExperimentSpec {
    DatasetSpec dataset;
    ModelSpec model;
    OptimizerSpec optimizer;
    std::size_t batch_size = 32;
    std::size_t baseline_batch = 32;
    std::size_t epochs = 1;
    // Samples per accumulation chunk; 0 means one chunk per batch.
    std::size_t chunk_size = 0;
    std::uint64_t seed = 0;
    std::string output_dir;
    SinkFormat metrics_format = SinkFormat::csv;
    // Size of the fixed training subset used for loss-gap evaluation.
    std::size_t eval_subset = 2000;
    // Norms are captured every step below this count, then once per epoch.
    std::size_t norm_capture_steps = 50;
    // Abort when the loss exceeds this multiple of the first step's loss.
    double divergence_factor = 1e4;
    bool save_checkpoint = true;

    std::size_t chunks_per_batch() const { return chunk_size == 0 ? 1 : batch_size / chunk_size; }

    // Throws ConfigError naming the offending field.
    void validate() const;

    friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

// Strict JSON parsing: unknown keys are rejected, missing keys take the
// defaults above. Relative IDX paths resolve against `base_dir`.
ExperimentSpec parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentSpec load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentSpec& spec);

// Loads or generates the train/test split described by the spec.
TrainTest load_dataset(const ExperimentSpec& spec);

// Optimizer settings for a run over `train_size` samples.
OptimizerConfig make_optimizer_config(const ExperimentSpec& spec, std::size_t train_size);

struct RunResult {
    bool diverged = false;
    std::string divergence_reason;
    std::optional<double> train_accuracy;  // absent when diverged
    std::optional<double> test_accuracy;   // absent when diverged
    double train_loss = std::numeric_limits<double>::quiet_NaN();
    double test_loss = std::numeric_limits<double>::quiet_NaN();
    double effective_lr = 0.0;
    std::size_t steps = 0;
    double wall_seconds = 0.0;
    std::filesystem::path output_dir;
    std::vector<std::filesystem::path> metric_files;
};

// Seeded end-to-end training run. Writes steps, norms and loss-gap streams,
// run.json and (optionally) model/optimizer checkpoints under the output
// directory. Divergence ends the run early with diverged = true.
RunResult run_experiment(const ExperimentSpec& spec);

enum class SweepAxis { lr, batch, epochs };
SweepAxis sweep_axis_from_string(std::string_view s);
std::string_view to_string(SweepAxis axis);

struct SweepSpec {
    ExperimentSpec base;
    SweepAxis axis = SweepAxis::lr;
    std::vector<double> values;
};

struct SweepPoint {
    double value = 0.0;
    ExperimentSpec spec;
    RunResult result;
};

struct SweepResult {
    std::vector<SweepPoint> points;  // sorted by axis value
    std::optional<std::size_t> best;  // highest test accuracy among converged runs
    std::filesystem::path summary_path;
};

// Applies one axis value to the base spec; output goes to <base>/<axis>_<value>.
ExperimentSpec sweep_point_spec(const SweepSpec& sweep, double value);
SweepResult run_sweep(const SweepSpec& sweep);

// Fixed-width table (batch, LR, epochs, accuracy) with the best row marked.
std::string format_summary(const SweepResult& result, SweepAxis axis);

}  // namespace lars
