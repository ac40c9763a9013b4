#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lars/dataset.hpp"
#include "lars/model.hpp"
#include "lars/optimizer.hpp"

namespace lars {

struct NormRatioRow {
    std::size_t step = 0;
    std::string group;
    double w_norm = 0.0;
    double g_norm = 0.0;
    std::optional<double> ratio;  // w_norm / g_norm; absent when g_norm == 0
    double local_lr = 1.0;
};

struct LossGapRow {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double test_loss = 0.0;
    double gap = 0.0;  // test_loss - train_loss
    double train_acc = 0.0;
    double test_acc = 0.0;
};

// Norms of every group's value and gradient as they stand. Read-only. The
// local_lr column is the rate the optimizer described by `cfg` would apply.
std::vector<NormRatioRow> capture_norms(std::span<const ParamGroup> groups, std::size_t step,
                                        const OptimizerConfig& cfg);

// Loss and accuracy over the whole of a dataset in inference mode.
EvalResult evaluate_dataset(const Model& model, const Dataset& data, std::size_t chunk = 1000);

LossGapRow capture_loss_gap(const Model& model, const Dataset& train_eval, const Dataset& test, std::size_t epoch);

enum class SinkFormat { csv, jsonl };
SinkFormat sink_format_from_string(std::string_view s);
std::string_view to_string(SinkFormat f);

using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;
using Row = std::vector<Cell>;

// Append-only metric stream with a fixed column set. CSV files start with a
// header line; null cells are written as `null`. JSONL files hold one object
// per row. Rows are buffered and written in emission order on flush().
class MetricsSink {
public:
    MetricsSink(std::filesystem::path path, SinkFormat format, std::vector<std::string> columns);
    ~MetricsSink();
    MetricsSink(const MetricsSink&) = delete;
    MetricsSink& operator=(const MetricsSink&) = delete;

    void emit(std::span<const Row> rows);
    void flush();

    const std::filesystem::path& path() const noexcept { return path_; }
    const std::vector<std::string>& columns() const noexcept { return columns_; }
    std::size_t rows_written() const noexcept { return written_; }

private:
    std::filesystem::path path_;
    SinkFormat format_;
    std::vector<std::string> columns_;
    std::vector<Row> buffer_;
    std::ofstream out_;
    std::size_t written_ = 0;
};

inline const std::vector<std::string> kNormColumns{"step", "group", "w_norm", "g_norm", "ratio", "local_lr"};
inline const std::vector<std::string> kLossGapColumns{"epoch",     "train_loss", "test_loss",
                                                      "gap",       "train_acc",  "test_acc"};
inline const std::vector<std::string> kStepColumns{"step", "epoch", "global_lr", "loss", "accuracy"};

void emit(MetricsSink& sink, std::span<const NormRatioRow> rows);
void emit(MetricsSink& sink, std::span<const LossGapRow> rows);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace lars
