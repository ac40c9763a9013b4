#include "lars/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lars/checkpoint.hpp"
#include "lars/errors.hpp"

namespace lars {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config parsing

namespace {

std::string join(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError((where.empty() ? "config" : where) + " must be a JSON object", where);
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) throw ConfigError("unknown key '" + join(where, key) + "'", join(where, key));
}

void read(const json& obj, const std::string& where, const char* key, std::size_t& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError(join(where, key) + " must be a non-negative integer", join(where, key));
    out = v.get<std::size_t>();
}

void read(const json& obj, const std::string& where, const char* key, std::uint64_t& out, int) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned()) throw ConfigError(join(where, key) + " must be a non-negative integer", join(where, key));
    out = v.get<std::uint64_t>();
}

void read(const json& obj, const std::string& where, const char* key, double& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(join(where, key) + " must be a number", join(where, key));
    out = v.get<double>();
}

void read(const json& obj, const std::string& where, const char* key, bool& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) throw ConfigError(join(where, key) + " must be true or false", join(where, key));
    out = v.get<bool>();
}

void read(const json& obj, const std::string& where, const char* key, std::string& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_string()) throw ConfigError(join(where, key) + " must be a string", join(where, key));
    out = v.get<std::string>();
}

template <typename Enum, typename F>
void read_enum(const json& obj, const std::string& where, const char* key, Enum& out, F parse) {
    std::string s;
    if (!obj.contains(key)) return;
    read(obj, where, key, s);
    try {
        out = parse(s);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(join(where, key) + ": " + e.what(), join(where, key));
    }
}

std::size_t line_of(std::string_view text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

DatasetSpec parse_dataset(const json& j, const fs::path& base_dir) {
    DatasetSpec d;
    const std::string w = "dataset";
    if (!j.is_object()) throw ConfigError("dataset must be a JSON object", w);
    std::string kind = "synthetic_blobs";
    read(j, w, "kind", kind);
    if (kind == "synthetic_blobs") {
        reject_unknown(j, {"kind", "classes", "dim", "train_per_class", "test_per_class", "separation", "spread"}, w);
        d.kind = DatasetSpec::Kind::synthetic_blobs;
        read(j, w, "classes", d.blobs.classes);
        read(j, w, "dim", d.blobs.dim);
        read(j, w, "train_per_class", d.blobs.train_per_class);
        read(j, w, "test_per_class", d.blobs.test_per_class);
        read(j, w, "separation", d.blobs.separation);
        read(j, w, "spread", d.blobs.spread);
        d.num_classes = d.blobs.classes;
    } else if (kind == "idx") {
        reject_unknown(j, {"kind", "train_images", "train_labels", "test_images", "test_labels", "num_classes"}, w);
        d.kind = DatasetSpec::Kind::idx;
        read(j, w, "train_images", d.train_images);
        read(j, w, "train_labels", d.train_labels);
        read(j, w, "test_images", d.test_images);
        read(j, w, "test_labels", d.test_labels);
        read(j, w, "num_classes", d.num_classes);
        for (auto* p : {&d.train_images, &d.train_labels, &d.test_images, &d.test_labels})
            if (!p->empty() && fs::path(*p).is_relative() && !base_dir.empty()) *p = (base_dir / *p).string();
    } else {
        throw ConfigError("dataset.kind must be 'synthetic_blobs' or 'idx'", "dataset.kind");
    }
    return d;
}

}  // namespace

ExperimentSpec parse_config(std::string_view text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error at line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
    }
    ExperimentSpec s;
    reject_unknown(j,
                   {"dataset", "model", "optimizer", "batch_size", "baseline_batch", "epochs", "chunk_size", "seed",
                    "output_dir", "metrics_format", "eval_subset", "norm_capture_steps", "divergence_factor",
                    "save_checkpoint"},
                   "");
    if (j.contains("dataset")) s.dataset = parse_dataset(j.at("dataset"), base_dir);
    if (j.contains("model")) {
        const auto& m = j.at("model");
        reject_unknown(m, {"hidden", "batch_norm"}, "model");
        if (m.contains("hidden")) {
            const auto& h = m.at("hidden");
            if (!h.is_array()) throw ConfigError("model.hidden must be an array of positive integers", "model.hidden");
            s.model.hidden.clear();
            for (const auto& v : h) {
                if (!v.is_number_unsigned() || v.get<std::size_t>() == 0)
                    throw ConfigError("model.hidden must be an array of positive integers", "model.hidden");
                s.model.hidden.push_back(v.get<std::size_t>());
            }
        }
        read(m, "model", "batch_norm", s.model.batch_norm);
    }
    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        const std::string w = "optimizer";
        reject_unknown(o,
                       {"kind", "base_lr", "momentum", "weight_decay", "trust_coeff", "max_local_lr", "warmup_epochs",
                        "warmup_init_lr", "decay", "power", "lr_scaling"},
                       w);
        auto& opt = s.optimizer;
        read_enum(o, w, "kind", opt.kind, optimizer_kind_from_string);
        read(o, w, "base_lr", opt.base_lr);
        read(o, w, "momentum", opt.momentum);
        read(o, w, "weight_decay", opt.weight_decay);
        read(o, w, "trust_coeff", opt.trust_coeff);
        if (o.contains("max_local_lr") && !o.at("max_local_lr").is_null()) read(o, w, "max_local_lr", opt.max_local_lr);
        read(o, w, "warmup_epochs", opt.warmup_epochs);
        read(o, w, "warmup_init_lr", opt.warmup_init_lr);
        read_enum(o, w, "decay", opt.decay, decay_kind_from_string);
        read(o, w, "power", opt.power);
        read_enum(o, w, "lr_scaling", opt.lr_scaling, [](std::string_view v) {
            if (v == "none") return LrScaling::none;
            if (v == "linear") return LrScaling::linear;
            throw std::invalid_argument("must be 'none' or 'linear'");
        });
    }
    read(j, "", "batch_size", s.batch_size);
    read(j, "", "baseline_batch", s.baseline_batch);
    read(j, "", "epochs", s.epochs);
    read(j, "", "chunk_size", s.chunk_size);
    read(j, "", "seed", s.seed, 0);
    read(j, "", "output_dir", s.output_dir);
    read_enum(j, "", "metrics_format", s.metrics_format, sink_format_from_string);
    read(j, "", "eval_subset", s.eval_subset);
    read(j, "", "norm_capture_steps", s.norm_capture_steps);
    read(j, "", "divergence_factor", s.divergence_factor);
    read(j, "", "save_checkpoint", s.save_checkpoint);
    s.validate();
    return s;
}

ExperimentSpec load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

std::string serialize_config(const ExperimentSpec& s) {
    json dataset;
    if (s.dataset.kind == DatasetSpec::Kind::synthetic_blobs) {
        const auto& b = s.dataset.blobs;
        dataset = {{"kind", "synthetic_blobs"},       {"classes", b.classes},
                   {"dim", b.dim},                   {"train_per_class", b.train_per_class},
                   {"test_per_class", b.test_per_class}, {"separation", b.separation},
                   {"spread", b.spread}};
    } else {
        dataset = {{"kind", "idx"},
                   {"train_images", s.dataset.train_images},
                   {"train_labels", s.dataset.train_labels},
                   {"test_images", s.dataset.test_images},
                   {"test_labels", s.dataset.test_labels},
                   {"num_classes", s.dataset.num_classes}};
    }
    const auto& o = s.optimizer;
    json opt{{"kind", to_string(o.kind)},
             {"base_lr", o.base_lr},
             {"momentum", o.momentum},
             {"weight_decay", o.weight_decay},
             {"trust_coeff", o.trust_coeff},
             {"max_local_lr", std::isfinite(o.max_local_lr) ? json(o.max_local_lr) : json(nullptr)},
             {"warmup_epochs", o.warmup_epochs},
             {"warmup_init_lr", o.warmup_init_lr},
             {"decay", to_string(o.decay)},
             {"power", o.power},
             {"lr_scaling", o.lr_scaling == LrScaling::linear ? "linear" : "none"}};
    json j{{"dataset", dataset},
           {"model", {{"hidden", s.model.hidden}, {"batch_norm", s.model.batch_norm}}},
           {"optimizer", opt},
           {"batch_size", s.batch_size},
           {"baseline_batch", s.baseline_batch},
           {"epochs", s.epochs},
           {"chunk_size", s.chunk_size},
           {"seed", s.seed},
           {"output_dir", s.output_dir},
           {"metrics_format", to_string(s.metrics_format)},
           {"eval_subset", s.eval_subset},
           {"norm_capture_steps", s.norm_capture_steps},
           {"divergence_factor", s.divergence_factor},
           {"save_checkpoint", s.save_checkpoint}};
    return j.dump(2);
}

void ExperimentSpec::validate() const {
    auto fail = [](const std::string& field, const std::string& msg) { throw ConfigError(field + " " + msg, field); };
    if (batch_size == 0) fail("batch_size", "must be positive");
    if (baseline_batch == 0) fail("baseline_batch", "must be positive");
    if (epochs == 0) fail("epochs", "must be at least 1");
    if (chunk_size != 0 && batch_size % chunk_size != 0)
        fail("chunk_size", "(" + std::to_string(chunk_size) + ") must divide batch_size (" +
                               std::to_string(batch_size) + ")");
    const std::size_t per_chunk = chunk_size == 0 ? batch_size : chunk_size;
    if (model.batch_norm && per_chunk < 2) fail("chunk_size", "must give batch norm at least 2 samples per chunk");
    if (eval_subset == 0) fail("eval_subset", "must be positive");
    if (!(divergence_factor > 1.0)) fail("divergence_factor", "must exceed 1");

    const auto& o = optimizer;
    if (!(o.base_lr > 0.0) || !std::isfinite(o.base_lr)) fail("optimizer.base_lr", "must be positive");
    if (!(o.momentum >= 0.0 && o.momentum < 1.0)) fail("optimizer.momentum", "must lie in [0, 1)");
    if (o.kind == OptimizerKind::sgd && o.momentum != 0.0)
        fail("optimizer.momentum", "must be 0 for kind 'sgd' (use 'sgd_momentum')");
    if (!(o.weight_decay >= 0.0)) fail("optimizer.weight_decay", "must be non-negative");
    if (!(o.trust_coeff > 0.0)) fail("optimizer.trust_coeff", "must be positive");
    if (!(o.max_local_lr > 0.0)) fail("optimizer.max_local_lr", "must be positive");
    if (!(o.warmup_epochs >= 0.0)) fail("optimizer.warmup_epochs", "must be non-negative");
    if (o.warmup_epochs > 0.0 && !(o.warmup_init_lr > 0.0)) fail("optimizer.warmup_init_lr", "must be positive");
    if (o.decay == DecayKind::polynomial && !(o.power > 0.0)) fail("optimizer.power", "must be positive");

    if (dataset.kind == DatasetSpec::Kind::synthetic_blobs) {
        const auto& b = dataset.blobs;
        if (b.classes < 2) fail("dataset.classes", "must be at least 2");
        if (b.dim == 0) fail("dataset.dim", "must be positive");
        if (b.train_per_class == 0) fail("dataset.train_per_class", "must be positive");
        if (b.test_per_class == 0) fail("dataset.test_per_class", "must be positive");
        if (!(b.separation >= 0.0)) fail("dataset.separation", "must be non-negative");
        if (!(b.spread >= 0.0)) fail("dataset.spread", "must be non-negative");
    } else {
        if (dataset.train_images.empty()) fail("dataset.train_images", "is required");
        if (dataset.train_labels.empty()) fail("dataset.train_labels", "is required");
        if (dataset.test_images.empty()) fail("dataset.test_images", "is required");
        if (dataset.test_labels.empty()) fail("dataset.test_labels", "is required");
        if (dataset.num_classes < 2) fail("dataset.num_classes", "must be at least 2");
    }
}

// ---------------------------------------------------------------------------
// Runs

TrainTest load_dataset(const ExperimentSpec& spec) {
    if (spec.dataset.kind == DatasetSpec::Kind::synthetic_blobs) {
        Rng rng = Rng(spec.seed).fork(1);
        return make_synthetic(spec.dataset.blobs, rng);
    }
    const auto& d = spec.dataset;
    return {load_idx(d.train_images, d.train_labels, d.num_classes), load_idx(d.test_images, d.test_labels, d.num_classes)};
}

OptimizerConfig make_optimizer_config(const ExperimentSpec& spec, std::size_t train_size) {
    const std::size_t per_epoch = train_size / spec.batch_size;
    if (per_epoch == 0)
        throw ConfigError("batch_size (" + std::to_string(spec.batch_size) + ") exceeds the training set (" +
                              std::to_string(train_size) + " samples)",
                          "batch_size");
    const auto& o = spec.optimizer;
    OptimizerConfig cfg;
    cfg.kind = o.kind;
    cfg.base_lr = o.lr_scaling == LrScaling::linear ? linear_scaled_lr(o.base_lr, spec.baseline_batch, spec.batch_size)
                                                    : o.base_lr;
    cfg.momentum = o.momentum;
    cfg.weight_decay = o.weight_decay;
    cfg.trust_coeff = o.trust_coeff;
    cfg.max_local_lr = o.max_local_lr;
    cfg.total_steps = spec.epochs * per_epoch;
    cfg.accum_factor = spec.chunks_per_batch();
    cfg.schedule.warmup_steps = static_cast<std::size_t>(std::floor(o.warmup_epochs * static_cast<double>(per_epoch)));
    cfg.schedule.warmup_init_lr = std::min(o.warmup_init_lr, cfg.base_lr);
    cfg.schedule.decay = o.decay;
    cfg.schedule.power = o.power;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("optimizer: ") + e.what(), "optimizer");
    }
    return cfg;
}

namespace {

fs::path resolve_output_dir(const ExperimentSpec& spec) {
    if (!spec.output_dir.empty()) return spec.output_dir;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return "lars_runs";
}

json result_json(const RunResult& r) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json files = json::array();
    for (const auto& f : r.metric_files) files.push_back(f.string());
    return {{"diverged", r.diverged},
            {"divergence_reason", r.divergence_reason},
            {"train_accuracy", opt(r.train_accuracy)},
            {"test_accuracy", opt(r.test_accuracy)},
            {"train_loss", num(r.train_loss)},
            {"test_loss", num(r.test_loss)},
            {"effective_lr", r.effective_lr},
            {"steps", r.steps},
            {"wall_seconds", r.wall_seconds},
            {"metric_files", files}};
}

}  // namespace

RunResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    const auto started = std::chrono::steady_clock::now();

    RunResult result;
    result.output_dir = resolve_output_dir(spec);
    fs::create_directories(result.output_dir);

    const TrainTest data = load_dataset(spec);
    const OptimizerConfig cfg = make_optimizer_config(spec, data.train.size());
    result.effective_lr = cfg.base_lr;

    const Rng root(spec.seed);
    Rng init_rng = root.fork(2);
    Rng order_rng = root.fork(3);
    Model model = Model::mlp({data.train.dim(), spec.model.hidden, data.train.num_classes, spec.model.batch_norm},
                             init_rng);
    Optimizer opt(cfg);

    const Dataset train_eval = data.train.head(spec.eval_subset);
    const std::string ext = spec.metrics_format == SinkFormat::csv ? ".csv" : ".jsonl";
    MetricsSink steps_sink(result.output_dir / ("steps" + ext), spec.metrics_format, kStepColumns);
    MetricsSink norms_sink(result.output_dir / ("norms" + ext), spec.metrics_format, kNormColumns);
    MetricsSink gap_sink(result.output_dir / ("loss_gap" + ext), spec.metrics_format, kLossGapColumns);
    result.metric_files = {steps_sink.path(), norms_sink.path(), gap_sink.path()};

    const std::size_t per_epoch = data.train.size() / spec.batch_size;
    const std::size_t chunks = spec.chunks_per_batch();
    std::vector<std::size_t> order(data.train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    double initial_loss = 0.0;
    auto diverge = [&](std::string reason) {
        result.diverged = true;
        result.divergence_reason = std::move(reason);
    };

    for (std::size_t epoch = 0; epoch < spec.epochs && !result.diverged; ++epoch) {
        order_rng.shuffle(order);
        for (std::size_t s = 0; s < per_epoch; ++s) {
            const std::size_t t = opt.step_count();
            const std::span<const std::size_t> rows(order.data() + s * spec.batch_size, spec.batch_size);
            const auto pieces = split_batch(data.train.gather(rows), chunks);
            const EvalResult r = accumulate_gradients(model, pieces);

            if (t == 0) initial_loss = r.loss;
            if (!std::isfinite(r.loss)) {
                diverge("non-finite loss at step " + std::to_string(t));
            } else if (r.loss > spec.divergence_factor * initial_loss) {
                diverge("loss " + format_double(r.loss) + " exceeds " + format_double(spec.divergence_factor) +
                        " x initial loss at step " + std::to_string(t));
            }
            if (result.diverged) {
                result.train_loss = r.loss;
                break;
            }

            if (t < spec.norm_capture_steps || s == 0) {
                const auto rows_out = capture_norms(model.groups(), t, cfg);
                emit(norms_sink, rows_out);
            }
            StepReport report;
            try {
                report = opt.step(model.groups());
            } catch (const DivergenceError& e) {
                diverge(e.what());
                result.train_loss = r.loss;
                break;
            }
            const std::vector<Row> step_row{{static_cast<std::int64_t>(t), static_cast<std::int64_t>(epoch),
                                             report.global_lr, r.loss, r.accuracy}};
            steps_sink.emit(step_row);
        }
        result.steps = opt.step_count();
        if (result.diverged) break;

        const LossGapRow gap = capture_loss_gap(model, train_eval, data.test, epoch);
        emit(gap_sink, std::span<const LossGapRow>(&gap, 1));
        steps_sink.flush();
        norms_sink.flush();
        gap_sink.flush();
        result.train_loss = gap.train_loss;
        result.test_loss = gap.test_loss;
        if (!std::isfinite(gap.train_loss) || !std::isfinite(gap.test_loss))
            diverge("non-finite evaluation loss after epoch " + std::to_string(epoch));
        else {
            result.train_accuracy = gap.train_acc;
            result.test_accuracy = gap.test_acc;
        }
    }
    steps_sink.flush();
    norms_sink.flush();
    gap_sink.flush();

    if (result.diverged) {
        result.train_accuracy.reset();
        result.test_accuracy.reset();
    }
    if (spec.save_checkpoint) {
        save_model(result.output_dir / "model.json", model);
        save_optimizer_state(result.output_dir / "optimizer.json", model, opt.step_count());
    }
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    json run{{"spec", json::parse(serialize_config(spec))}, {"result", result_json(result)}};
    std::ofstream out(result.output_dir / "run.json");
    if (!out) throw SinkError("cannot write " + (result.output_dir / "run.json").string());
    out << run.dump(2) << '\n';
    return result;
}

// ---------------------------------------------------------------------------
// Sweeps

SweepAxis sweep_axis_from_string(std::string_view s) {
    if (s == "lr") return SweepAxis::lr;
    if (s == "batch") return SweepAxis::batch;
    if (s == "epochs") return SweepAxis::epochs;
    throw std::invalid_argument("unknown sweep axis '" + std::string(s) + "' (expected lr, batch or epochs)");
}

std::string_view to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::lr: return "lr";
        case SweepAxis::batch: return "batch";
        case SweepAxis::epochs: return "epochs";
    }
    return "unknown";
}

ExperimentSpec sweep_point_spec(const SweepSpec& sweep, double value) {
    ExperimentSpec spec = sweep.base;
    const std::string field = std::string(to_string(sweep.axis));
    auto as_count = [&](double v) {
        if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError(field + " sweep values must be positive integers", field);
        return static_cast<std::size_t>(v);
    };
    switch (sweep.axis) {
        case SweepAxis::lr: spec.optimizer.base_lr = value; break;
        case SweepAxis::batch: spec.batch_size = as_count(value); break;
        case SweepAxis::epochs: spec.epochs = as_count(value); break;
    }
    spec.output_dir = (resolve_output_dir(sweep.base) / (field + "_" + format_double(value))).string();
    spec.validate();
    return spec;
}

SweepResult run_sweep(const SweepSpec& sweep) {
    if (sweep.values.empty()) throw ConfigError("sweep needs at least one value", "values");
    std::vector<double> values = sweep.values;
    std::sort(values.begin(), values.end());
    if (std::adjacent_find(values.begin(), values.end()) != values.end())
        throw ConfigError("sweep values must be distinct", "values");

    std::vector<ExperimentSpec> specs;
    for (double v : values) specs.push_back(sweep_point_spec(sweep, v));

    SweepResult out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out.points.push_back({values[i], specs[i], run_experiment(specs[i])});
        const auto& r = out.points.back().result;
        if (!r.diverged && r.test_accuracy &&
            (!out.best || *r.test_accuracy > *out.points[*out.best].result.test_accuracy))
            out.best = i;
    }

    const fs::path dir = resolve_output_dir(sweep.base);
    fs::create_directories(dir);
    out.summary_path = dir / ("summary_" + std::string(to_string(sweep.axis)) + ".csv");
    MetricsSink sink(out.summary_path, SinkFormat::csv,
                     {"axis", "value", "batch_size", "base_lr", "effective_lr", "epochs", "steps", "diverged",
                      "train_loss", "test_loss", "train_acc", "test_acc", "best"});
    std::vector<Row> rows;
    for (std::size_t i = 0; i < out.points.size(); ++i) {
        const auto& p = out.points[i];
        auto opt = [](const std::optional<double>& v) { return v ? Cell{*v} : Cell{}; };
        auto num = [](double v) { return std::isfinite(v) ? Cell{v} : Cell{}; };
        rows.push_back({std::string(to_string(sweep.axis)), p.value, static_cast<std::int64_t>(p.spec.batch_size),
                        p.spec.optimizer.base_lr, p.result.effective_lr, static_cast<std::int64_t>(p.spec.epochs),
                        static_cast<std::int64_t>(p.result.steps), static_cast<std::int64_t>(p.result.diverged),
                        num(p.result.train_loss), num(p.result.test_loss), opt(p.result.train_accuracy),
                        opt(p.result.test_accuracy), static_cast<std::int64_t>(out.best == i)});
    }
    sink.emit(rows);
    sink.flush();
    return out;
}

std::string format_summary(const SweepResult& result, SweepAxis axis) {
    std::ostringstream os;
    os << "sweep over " << to_string(axis) << "\n";
    os << "  " << std::left << std::setw(8) << "batch" << std::setw(14) << "base LR" << std::setw(14) << "eff. LR"
       << std::setw(8) << "epochs" << std::setw(8) << "steps" << "accuracy,%\n";
    for (std::size_t i = 0; i < result.points.size(); ++i) {
        const auto& p = result.points[i];
        const bool best = result.best == i;
        os << (best ? "* " : "  ") << std::left << std::setw(8) << p.spec.batch_size << std::setw(14)
           << format_double(p.spec.optimizer.base_lr) << std::setw(14) << format_double(p.result.effective_lr)
           << std::setw(8) << p.spec.epochs << std::setw(8) << p.result.steps;
        if (p.result.diverged || !p.result.test_accuracy)
            os << "diverged";
        else
            os << std::fixed << std::setprecision(2) << 100.0 * *p.result.test_accuracy << std::defaultfloat;
        os << "\n";
    }
    return os.str();
}

}  // namespace lars
