#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lars/checkpoint.hpp"
#include "lars/dataset.hpp"
#include "lars/diagnostics.hpp"
#include "lars/errors.hpp"
#include "lars/experiment.hpp"
#include "lars/gradcheck.hpp"
#include "lars/model.hpp"
#include "lars/optimizer.hpp"

namespace py = pybind11;
using namespace lars;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
    if (a.ndim() == 0) throw std::invalid_argument("expected an array with at least one dimension");
    Shape shape(a.shape(), a.shape() + a.ndim());
    return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
    Array out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

Batch to_batch(const Array& x, const std::vector<int>& y) { return {to_tensor(x), y}; }

py::dict eval_dict(const EvalResult& r) {
    py::dict d;
    d["loss"] = r.loss;
    d["accuracy"] = r.accuracy;
    return d;
}

py::dict report_dict(const StepReport& r) {
    py::list groups;
    for (const auto& g : r.groups) {
        py::dict d;
        d["name"] = g.name;
        d["w_norm"] = g.w_norm;
        d["g_norm"] = g.g_norm;
        d["trust_ratio"] = g.trust_ratio ? py::cast(*g.trust_ratio) : py::none();
        d["local_lr"] = g.local_lr;
        d["update_norm"] = g.update_norm;
        groups.append(d);
    }
    py::dict d;
    d["step"] = r.step;
    d["global_lr"] = r.global_lr;
    d["groups"] = groups;
    return d;
}

py::dict result_dict(const RunResult& r) {
    py::dict d;
    d["diverged"] = r.diverged;
    d["divergence_reason"] = r.divergence_reason;
    d["train_accuracy"] = r.train_accuracy ? py::cast(*r.train_accuracy) : py::none();
    d["test_accuracy"] = r.test_accuracy ? py::cast(*r.test_accuracy) : py::none();
    d["train_loss"] = r.train_loss;
    d["test_loss"] = r.test_loss;
    d["effective_lr"] = r.effective_lr;
    d["steps"] = r.steps;
    d["wall_seconds"] = r.wall_seconds;
    d["output_dir"] = r.output_dir.string();
    std::vector<std::string> files;
    for (const auto& f : r.metric_files) files.push_back(f.string());
    d["metric_files"] = files;
    return d;
}

}  // namespace

PYBIND11_MODULE(_lars, m) {
    m.doc() = "Layer-wise adaptive rate scaling for MLPs: optimizers, gradient checks and experiment runs.";

    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<SinkError>(m, "SinkError", PyExc_OSError);

    m.def("l2_norm", [](const Array& a) { return l2_norm(to_tensor(a)); }, py::arg("x"));
    m.def("local_lr", &local_lr, py::arg("w_norm"), py::arg("g_norm"), py::arg("eta"), py::arg("beta"));
    m.def("linear_scaled_lr", &linear_scaled_lr, py::arg("base_lr"), py::arg("base_batch"), py::arg("new_batch"));

    py::class_<OptimizerConfig>(m, "OptimizerConfig")
        .def(py::init<>())
        .def_property(
            "kind", [](const OptimizerConfig& c) { return std::string(to_string(c.kind)); },
            [](OptimizerConfig& c, const std::string& s) { c.kind = optimizer_kind_from_string(s); })
        .def_readwrite("base_lr", &OptimizerConfig::base_lr)
        .def_readwrite("momentum", &OptimizerConfig::momentum)
        .def_readwrite("weight_decay", &OptimizerConfig::weight_decay)
        .def_readwrite("trust_coeff", &OptimizerConfig::trust_coeff)
        .def_readwrite("max_local_lr", &OptimizerConfig::max_local_lr)
        .def_readwrite("total_steps", &OptimizerConfig::total_steps)
        .def_readwrite("accum_factor", &OptimizerConfig::accum_factor)
        .def_property(
            "warmup_steps", [](const OptimizerConfig& c) { return c.schedule.warmup_steps; },
            [](OptimizerConfig& c, std::size_t v) { c.schedule.warmup_steps = v; })
        .def_property(
            "warmup_init_lr", [](const OptimizerConfig& c) { return c.schedule.warmup_init_lr; },
            [](OptimizerConfig& c, double v) { c.schedule.warmup_init_lr = v; })
        .def_property(
            "decay", [](const OptimizerConfig& c) { return std::string(to_string(c.schedule.decay)); },
            [](OptimizerConfig& c, const std::string& s) { c.schedule.decay = decay_kind_from_string(s); })
        .def_property(
            "power", [](const OptimizerConfig& c) { return c.schedule.power; },
            [](OptimizerConfig& c, double v) { c.schedule.power = v; })
        .def("validate", &OptimizerConfig::validate);

    m.def("global_lr", &global_lr, py::arg("config"), py::arg("step"));

    py::class_<Model>(m, "Model")
        .def(py::init([](std::size_t input_dim, std::vector<std::size_t> hidden, std::size_t num_classes,
                         bool batch_norm, std::uint64_t seed) {
                 Rng rng(seed);
                 return Model::mlp({input_dim, std::move(hidden), num_classes, batch_norm}, rng);
             }),
             py::arg("input_dim") = 784, py::arg("hidden") = std::vector<std::size_t>{256, 128},
             py::arg("num_classes") = 10, py::arg("batch_norm") = false, py::arg("seed") = 0)
        .def_property_readonly("group_names",
                               [](const Model& self) {
                                   std::vector<std::string> names;
                                   for (const auto& g : self.groups()) names.push_back(g.name);
                                   return names;
                               })
        .def("param", [](const Model& self, const std::string& name) { return to_array(self.group(name).value); })
        .def("grad", [](const Model& self, const std::string& name) { return to_array(self.group(name).grad); })
        .def("set_param",
             [](Model& self, const std::string& name, const Array& value) {
                 auto& g = self.group(name);
                 Tensor t = to_tensor(value);
                 require_same_shape(g.value, t, "set_param");
                 g.value = std::move(t);
             })
        .def("set_flags",
             [](Model& self, const std::string& name, bool apply_lars, bool apply_weight_decay) {
                 auto& g = self.group(name);
                 g.apply_lars = apply_lars;
                 g.apply_weight_decay = apply_weight_decay;
             },
             py::arg("name"), py::arg("apply_lars"), py::arg("apply_weight_decay"))
        .def_property(
            "training", &Model::training,
            [](Model& self, bool on) { self.set_mode(on ? Mode::training : Mode::inference); })
        .def("forward_backward",
             [](Model& self, const Array& x, const std::vector<int>& y) {
                 return eval_dict(self.forward_backward(to_batch(x, y)));
             })
        .def("evaluate",
             [](const Model& self, const Array& x, const std::vector<int>& y) {
                 return eval_dict(self.evaluate(to_batch(x, y)));
             })
        .def("logits", [](const Model& self, const Array& x) { return to_array(self.logits(to_tensor(x))); })
        .def("parameter_count", &Model::parameter_count)
        .def("save", [](const Model& self, const std::filesystem::path& p) { save_model(p, self); })
        .def_static("load", &load_model);

    m.def("lars_step", [](Model& model, const OptimizerConfig& cfg, std::size_t t) {
        return report_dict(lars_step(model.groups(), cfg, t));
    });
    m.def("sgd_step", [](Model& model, const OptimizerConfig& cfg, std::size_t t) {
        return report_dict(sgd_step(model.groups(), cfg, t));
    });

    m.def(
        "check_model",
        [](const Model& model, const Array& x, const std::vector<int>& y, std::size_t max_coords) {
            GradCheckThresholds th;
            th.max_coords_per_group = max_coords;
            py::list out;
            for (const auto& r : check_model(model, to_batch(x, y), th)) {
                py::dict d;
                d["group"] = r.group;
                d["max_relative_error"] = r.max_relative_error;
                d["worst_index"] = r.worst_index;
                d["checked"] = r.checked;
                d["skipped_kinks"] = r.skipped_kinks;
                d["threshold"] = r.threshold;
                d["pass"] = r.pass;
                out.append(d);
            }
            return out;
        },
        py::arg("model"), py::arg("x"), py::arg("y"), py::arg("max_coords") = 0);

    m.def(
        "make_synthetic",
        [](std::size_t classes, std::size_t dim, std::size_t train_per_class, std::size_t test_per_class,
           double separation, double spread, std::uint64_t seed) {
            Rng rng(seed);
            const auto d = make_synthetic({classes, dim, train_per_class, test_per_class, separation, spread}, rng);
            return py::make_tuple(to_array(d.train.inputs), d.train.labels, to_array(d.test.inputs), d.test.labels);
        },
        py::arg("classes") = 10, py::arg("dim") = 32, py::arg("train_per_class") = 1000,
        py::arg("test_per_class") = 200, py::arg("separation") = 1.0, py::arg("spread") = 1.0, py::arg("seed") = 0);

    py::class_<ExperimentSpec>(m, "ExperimentSpec")
        .def_static("from_json", [](const std::string& text) { return parse_config(text); })
        .def_static("load", &load_config)
        .def("to_json", &serialize_config)
        .def_readwrite("batch_size", &ExperimentSpec::batch_size)
        .def_readwrite("epochs", &ExperimentSpec::epochs)
        .def_readwrite("chunk_size", &ExperimentSpec::chunk_size)
        .def_readwrite("seed", &ExperimentSpec::seed)
        .def_readwrite("output_dir", &ExperimentSpec::output_dir);

    m.def("load_config", &load_config, py::arg("path"));
    m.def("run_experiment", [](const ExperimentSpec& spec) { return result_dict(run_experiment(spec)); });
    m.def(
        "run_sweep",
        [](const ExperimentSpec& base, const std::string& axis, const std::vector<double>& values) {
            const auto ax = sweep_axis_from_string(axis);
            const auto r = run_sweep({base, ax, values});
            py::list points;
            for (const auto& p : r.points) {
                py::dict d = result_dict(p.result);
                d["value"] = p.value;
                points.append(d);
            }
            py::dict d;
            d["points"] = points;
            d["best"] = r.best ? py::cast(*r.best) : py::none();
            d["summary_path"] = r.summary_path.string();
            d["table"] = format_summary(r, ax);
            return d;
        },
        py::arg("base"), py::arg("axis"), py::arg("values"));
}
