#include "lars/checkpoint.hpp"

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "lars/errors.hpp"

namespace lars {

using nlohmann::json;

namespace {

constexpr int kVersion = 1;

void write_json(const std::filesystem::path& path, const json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw SinkError("cannot write checkpoint " + path.string());
    out << j.dump() << '\n';
    if (!out) throw SinkError("failed writing checkpoint " + path.string());
}

json read_json(const std::filesystem::path& path, const char* format) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open checkpoint " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError("checkpoint " + path.string() + ": " + e.what());
    }
    if (!j.is_object() || j.value("format", "") != format)
        throw FormatError("checkpoint " + path.string() + " is not a '" + format + "' document");
    if (j.value("version", 0) != kVersion)
        throw FormatError("checkpoint " + path.string() + ": unsupported version");
    return j;
}

Tensor tensor_from(const json& shape, const json& values, const std::string& what) {
    try {
        return Tensor(shape.get<Shape>(), values.get<std::vector<double>>());
    } catch (const json::exception& e) {
        throw FormatError(what + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(what + ": " + e.what());
    }
}

}  // namespace

void save_model(const std::filesystem::path& path, const Model& model) {
    const auto& topo = model.topology();
    json j{{"format", "lars.model"},
           {"version", kVersion},
           {"topology",
            {{"input_dim", topo.input_dim},
             {"hidden", topo.hidden},
             {"num_classes", topo.num_classes},
             {"batch_norm", topo.batch_norm}}}};
    json groups = json::array();
    for (const auto& g : model.groups())
        groups.push_back({{"name", g.name},
                          {"kind", to_string(g.kind)},
                          {"shape", g.value.shape()},
                          {"apply_weight_decay", g.apply_weight_decay},
                          {"apply_lars", g.apply_lars},
                          {"value", g.value.values()},
                          {"grad", g.grad.values()}});
    j["groups"] = std::move(groups);
    json bn = json::array();
    const auto& layers = model.layers();
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (const auto* b = std::get_if<Model::BatchNorm>(&layers[i]))
            bn.push_back({{"layer", i}, {"running_mean", b->running.mean.values()},
                          {"running_var", b->running.var.values()}});
    j["batch_norm"] = std::move(bn);
    write_json(path, j);
}

Model load_model(const std::filesystem::path& path) {
    const json j = read_json(path, "lars.model");
    try {
        const auto& t = j.at("topology");
        Topology topo;
        topo.input_dim = t.at("input_dim").get<std::size_t>();
        topo.hidden = t.at("hidden").get<std::vector<std::size_t>>();
        topo.num_classes = t.at("num_classes").get<std::size_t>();
        topo.batch_norm = t.at("batch_norm").get<bool>();

        Rng unused(0);
        Model model = Model::mlp(topo, unused);
        const auto& groups = j.at("groups");
        if (groups.size() != model.groups().size())
            throw FormatError("checkpoint " + path.string() + ": group count does not match the topology");
        for (const auto& gj : groups) {
            const auto name = gj.at("name").get<std::string>();
            ParamGroup* g = nullptr;
            try {
                g = &model.group(name);
            } catch (const std::out_of_range&) {
                throw FormatError("checkpoint " + path.string() + ": unexpected group '" + name + "'");
            }
            g->kind = param_kind_from_string(gj.at("kind").get<std::string>());
            g->apply_weight_decay = gj.at("apply_weight_decay").get<bool>();
            g->apply_lars = gj.at("apply_lars").get<bool>();
            Tensor value = tensor_from(gj.at("shape"), gj.at("value"), name);
            Tensor grad = tensor_from(gj.at("shape"), gj.at("grad"), name);
            if (value.shape() != g->value.shape())
                throw FormatError("checkpoint " + path.string() + ": group '" + name + "' has shape " +
                                  shape_to_string(value.shape()));
            g->value = std::move(value);
            g->grad = std::move(grad);
        }
        auto& layers = model.layers();
        for (const auto& bj : j.at("batch_norm")) {
            const auto idx = bj.at("layer").get<std::size_t>();
            auto* b = idx < layers.size() ? std::get_if<Model::BatchNorm>(&layers[idx]) : nullptr;
            if (!b) throw FormatError("checkpoint " + path.string() + ": layer " + std::to_string(idx) + " is not batch norm");
            const Shape shape = b->running.mean.shape();
            b->running.mean = tensor_from(shape, bj.at("running_mean"), "running_mean");
            b->running.var = tensor_from(shape, bj.at("running_var"), "running_var");
        }
        return model;
    } catch (const json::exception& e) {
        throw FormatError("checkpoint " + path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError("checkpoint " + path.string() + ": " + e.what());
    }
}

void save_optimizer_state(const std::filesystem::path& path, const Model& model, std::size_t step) {
    json buffers = json::array();
    for (const auto& g : model.groups())
        buffers.push_back({{"name", g.name}, {"shape", g.momentum_buf.shape()}, {"values", g.momentum_buf.values()}});
    write_json(path, {{"format", "lars.optimizer"}, {"version", kVersion}, {"step", step}, {"momentum", buffers}});
}

std::size_t load_optimizer_state(const std::filesystem::path& path, Model& model) {
    const json j = read_json(path, "lars.optimizer");
    try {
        for (const auto& bj : j.at("momentum")) {
            const auto name = bj.at("name").get<std::string>();
            ParamGroup* g = nullptr;
            try {
                g = &model.group(name);
            } catch (const std::out_of_range&) {
                throw FormatError("optimizer state " + path.string() + ": unknown group '" + name + "'");
            }
            Tensor v = tensor_from(bj.at("shape"), bj.at("values"), name);
            if (v.shape() != g->value.shape())
                throw FormatError("optimizer state " + path.string() + ": shape mismatch for '" + name + "'");
            g->momentum_buf = std::move(v);
        }
        return j.at("step").get<std::size_t>();
    } catch (const json::exception& e) {
        throw FormatError("optimizer state " + path.string() + ": " + e.what());
    }
}

}  // namespace lars
