// larsctl: command-line front end for training runs, sweeps, gradient checks
// and checkpoint inspection.
//
// Exit codes: 0 success, 1 runtime failure (I/O, failed gradient check),
// 2 run diverged, 3 configuration error.

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lars/checkpoint.hpp"
#include "lars/errors.hpp"
#include "lars/experiment.hpp"
#include "lars/gradcheck.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitConfig = 3;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

lars::ExperimentSpec load_spec(const Common& c) {
    auto spec = lars::load_config(c.config);
    if (c.seed) spec.seed = *c.seed;
    if (!c.out.empty()) spec.output_dir = c.out;
    return spec;
}

void print_result(const lars::RunResult& r) {
    std::cout << "output:        " << r.output_dir.string() << "\n"
              << "steps:         " << r.steps << "\n"
              << "effective lr:  " << lars::format_double(r.effective_lr) << "\n";
    if (r.diverged) {
        std::cout << "DIVERGED:      " << r.divergence_reason << "\n";
        return;
    }
    std::cout << std::fixed << std::setprecision(4) << "train loss:    " << r.train_loss << "\n"
              << "test loss:     " << r.test_loss << "\n"
              << "train acc:     " << *r.train_accuracy << "\n"
              << "test acc:      " << *r.test_accuracy << "\n"
              << std::defaultfloat << "wall seconds:  " << r.wall_seconds << "\n";
}

int cmd_train(const Common& c) {
    const auto result = lars::run_experiment(load_spec(c));
    print_result(result);
    return result.diverged ? kExitDiverged : kExitOk;
}

int cmd_sweep(const Common& c, const std::string& axis, const std::vector<double>& values) {
    lars::SweepSpec sweep;
    sweep.base = load_spec(c);
    try {
        sweep.axis = lars::sweep_axis_from_string(axis);
    } catch (const std::invalid_argument& e) {
        throw lars::ConfigError(e.what(), "axis");
    }
    sweep.values = values;
    const auto result = lars::run_sweep(sweep);
    std::cout << lars::format_summary(result, sweep.axis) << "summary: " << result.summary_path.string() << "\n";
    return kExitOk;
}

int cmd_gradcheck(const Common& c, std::size_t samples, std::size_t max_coords) {
    const auto spec = load_spec(c);
    const auto data = lars::load_dataset(spec);
    lars::Rng init = lars::Rng(spec.seed).fork(2);
    const lars::Model model = lars::Model::mlp(
        {data.train.dim(), spec.model.hidden, data.train.num_classes, spec.model.batch_norm}, init);
    const std::size_t n = std::min(samples, data.train.size());
    if (n < 2 && spec.model.batch_norm) throw lars::ConfigError("gradcheck with batch norm needs at least 2 samples");
    const auto batch = data.train.slice(0, n);

    lars::GradCheckThresholds thresholds;
    thresholds.max_coords_per_group = max_coords;
    const auto reports = lars::check_model(model, batch, thresholds);

    bool all_pass = true;
    std::cout << std::left << std::setw(16) << "group" << std::setw(14) << "max rel err" << std::setw(10)
              << "threshold" << std::setw(9) << "checked" << std::setw(9) << "kinks" << "result\n";
    for (const auto& r : reports) {
        all_pass = all_pass && r.pass;
        std::cout << std::left << std::setw(16) << r.group << std::setw(14) << std::scientific << std::setprecision(3)
                  << r.max_relative_error << std::setw(10) << std::setprecision(0) << r.threshold
                  << std::defaultfloat << std::setw(9) << r.checked << std::setw(9) << r.skipped_kinks
                  << (r.pass ? "PASS" : "FAIL") << "\n";
    }
    const std::filesystem::path dir = spec.output_dir.empty() ? std::filesystem::path(".") : std::filesystem::path(spec.output_dir);
    std::filesystem::create_directories(dir);
    lars::write_gradcheck_report(dir / "gradcheck.json", reports);
    std::cout << "report: " << (dir / "gradcheck.json").string() << "\n";
    return all_pass ? kExitOk : kExitFailure;
}

int cmd_inspect(const std::string& checkpoint) {
    const auto model = lars::load_model(checkpoint);
    std::cout << std::left << std::setw(16) << "group" << std::setw(14) << "shape" << std::setw(14) << "|w|"
              << std::setw(14) << "|g|" << "|w|/|g|\n";
    for (const auto& g : model.groups()) {
        const double w = lars::l2_norm(g.value), gn = lars::l2_norm(g.grad);
        std::cout << std::left << std::setw(16) << g.name << std::setw(14) << lars::shape_to_string(g.value.shape())
                  << std::setw(14) << std::setprecision(6) << w << std::setw(14) << gn;
        if (gn > 0.0)
            std::cout << w / gn;
        else
            std::cout << "null";
        std::cout << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Layer-wise adaptive rate scaling experiments"};
    app.require_subcommand(1);

    Common common;

    auto* train = app.add_subcommand("train", "Run one experiment from a JSON config");
    train->add_option("--config", common.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    train->add_option("--seed", common.seed, "Override the config seed");
    train->add_option("--out", common.out, "Output directory");

    std::string axis;
    std::vector<double> values;
    auto* sweep = app.add_subcommand("sweep", "Run one experiment per value along an axis");
    sweep->add_option("--config", common.config, "Base experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sweep->add_option("--axis", axis, "Sweep axis: lr, batch or epochs")->required();
    sweep->add_option("--values", values, "Axis values")->required();
    sweep->add_option("--seed", common.seed, "Override the config seed");
    sweep->add_option("--out", common.out, "Output directory");

    std::size_t samples = 8;
    std::size_t max_coords = 64;
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every parameter group");
    gradcheck->add_option("--config", common.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    gradcheck->add_option("--samples", samples, "Batch size used for the check")->capture_default_str();
    gradcheck->add_option("--max-coords", max_coords, "Coordinates checked per group (0 = all)")->capture_default_str();
    gradcheck->add_option("--seed", common.seed, "Override the config seed");
    gradcheck->add_option("--out", common.out, "Directory for gradcheck.json");

    std::string checkpoint;
    auto* inspect = app.add_subcommand("inspect-norms", "Print per-group norms stored in a model checkpoint");
    inspect->add_option("--checkpoint", checkpoint, "Model checkpoint (model.json)")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*train) return cmd_train(common);
        if (*sweep) return cmd_sweep(common, axis, values);
        if (*gradcheck) return cmd_gradcheck(common, samples, max_coords);
        if (*inspect) return cmd_inspect(checkpoint);
    } catch (const lars::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}
