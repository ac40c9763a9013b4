#include "lars/diagnostics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lars/errors.hpp"

namespace lars {

std::vector<NormRatioRow> capture_norms(std::span<const ParamGroup> groups, std::size_t step,
                                        const OptimizerConfig& cfg) {
    std::vector<NormRatioRow> rows;
    rows.reserve(groups.size());
    for (const auto& g : groups) {
        NormRatioRow r;
        r.step = step;
        r.group = g.name;
        r.w_norm = l2_norm(g.value);
        r.g_norm = l2_norm(g.grad);
        if (r.g_norm > 0.0) r.ratio = r.w_norm / r.g_norm;
        if (cfg.kind == OptimizerKind::lars && g.apply_lars && std::isfinite(r.w_norm) && std::isfinite(r.g_norm)) {
            const double beta = g.apply_weight_decay ? cfg.weight_decay : 0.0;
            r.local_lr = std::min(local_lr(r.w_norm, r.g_norm, cfg.trust_coeff, beta), cfg.max_local_lr);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

EvalResult evaluate_dataset(const Model& model, const Dataset& data, std::size_t chunk) {
    if (data.empty()) throw std::invalid_argument("evaluate_dataset: empty evaluation set");
    if (chunk == 0) chunk = data.size();
    double loss = 0.0, correct = 0.0;
    for (std::size_t begin = 0; begin < data.size(); begin += chunk) {
        const std::size_t end = std::min(begin + chunk, data.size());
        const auto r = model.evaluate(data.slice(begin, end));
        const auto n = static_cast<double>(end - begin);
        loss += r.loss * n;
        correct += r.accuracy * n;
    }
    const auto total = static_cast<double>(data.size());
    return {loss / total, correct / total};
}

LossGapRow capture_loss_gap(const Model& model, const Dataset& train_eval, const Dataset& test, std::size_t epoch) {
    if (train_eval.empty() || test.empty()) throw std::invalid_argument("capture_loss_gap: empty evaluation set");
    Model eval = model;
    eval.set_mode(Mode::inference);
    const auto tr = evaluate_dataset(eval, train_eval);
    const auto te = evaluate_dataset(eval, test);
    return {epoch, tr.loss, te.loss, te.loss - tr.loss, tr.accuracy, te.accuracy};
}

SinkFormat sink_format_from_string(std::string_view s) {
    if (s == "csv") return SinkFormat::csv;
    if (s == "jsonl") return SinkFormat::jsonl;
    throw std::invalid_argument("unknown metrics format '" + std::string(s) + "'");
}

std::string_view to_string(SinkFormat f) { return f == SinkFormat::csv ? "csv" : "jsonl"; }

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return {buf, ptr};
}

namespace {

std::string csv_cell(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>)
                return "null";
            else if constexpr (std::is_same_v<T, std::int64_t>)
                return std::to_string(v);
            else if constexpr (std::is_same_v<T, double>)
                return format_double(v);
            else {
                if (v.find_first_of(",\"\n") == std::string::npos) return v;
                std::string q = "\"";
                for (char ch : v) {
                    if (ch == '"') q += '"';
                    q += ch;
                }
                return q + '"';
            }
        },
        c);
}

nlohmann::json json_cell(const Cell& c) {
    return std::visit(
        [](const auto& v) -> nlohmann::json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>)
                return nullptr;
            else if constexpr (std::is_same_v<T, double>)
                return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
            else
                return v;
        },
        c);
}

}  // namespace

MetricsSink::MetricsSink(std::filesystem::path path, SinkFormat format, std::vector<std::string> columns)
    : path_(std::move(path)), format_(format), columns_(std::move(columns)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    out_.open(path_, std::ios::out | std::ios::trunc);
    if (!out_) throw SinkError("cannot open metrics file " + path_.string());
    if (format_ == SinkFormat::csv) {
        for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
        out_ << '\n';
        out_.flush();
        if (!out_) throw SinkError("failed writing metrics header to " + path_.string());
    }
}

MetricsSink::~MetricsSink() {
    try {
        flush();
    } catch (...) {
    }
}

void MetricsSink::emit(std::span<const Row> rows) {
    for (const auto& r : rows) {
        if (r.size() != columns_.size())
            throw std::invalid_argument("MetricsSink: row has " + std::to_string(r.size()) + " cells, expected " +
                                        std::to_string(columns_.size()));
        buffer_.push_back(r);
    }
}

void MetricsSink::flush() {
    if (buffer_.empty()) return;
    for (const auto& r : buffer_) {
        if (format_ == SinkFormat::csv) {
            for (std::size_t i = 0; i < r.size(); ++i) out_ << (i ? "," : "") << csv_cell(r[i]);
            out_ << '\n';
        } else {
            nlohmann::ordered_json obj;
            for (std::size_t i = 0; i < r.size(); ++i) obj[columns_[i]] = json_cell(r[i]);
            out_ << obj.dump() << '\n';
        }
    }
    out_.flush();
    if (!out_) throw SinkError("failed writing metrics to " + path_.string());
    written_ += buffer_.size();
    buffer_.clear();
}

void emit(MetricsSink& sink, std::span<const NormRatioRow> rows) {
    std::vector<Row> out;
    out.reserve(rows.size());
    for (const auto& r : rows)
        out.push_back({static_cast<std::int64_t>(r.step), r.group, r.w_norm, r.g_norm,
                       r.ratio ? Cell{*r.ratio} : Cell{}, r.local_lr});
    sink.emit(out);
}

void emit(MetricsSink& sink, std::span<const LossGapRow> rows) {
    std::vector<Row> out;
    out.reserve(rows.size());
    for (const auto& r : rows)
        out.push_back({static_cast<std::int64_t>(r.epoch), r.train_loss, r.test_loss, r.gap, r.train_acc,
                       r.test_acc});
    sink.emit(out);
}

}  // namespace lars
