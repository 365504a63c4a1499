// xaudit: train tabular classifiers, explain their predictions, and audit
// explanation quality for demographic disparities.

#include "xaudit/explainers.hpp"
#include "xaudit/harness.hpp"
#include "xaudit/models.hpp"
#include "xaudit/rng.hpp"
#include "xaudit/version.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <set>
#include <string>

namespace {

using namespace xaudit;

int cmd_train(const std::string& config_path, std::uint64_t seed,
              const std::string& out_override) {
    const ExperimentConfig cfg = load_config(config_path);
    const std::filesystem::path out =
        out_override.empty() ? (cfg.output_dir.empty() ? "." : cfg.output_dir)
                             : std::filesystem::path(out_override);
    std::filesystem::create_directories(out / "models");

    const Dataset data = cfg.dataset.realize();
    const auto [train, test] = stratified_split(data, cfg.test_fraction, seed);
    const auto [fm_train, fm_test] = encode_features(train, test);

    for (ModelKind kind : cfg.model_kinds) {
        TrainConfig train_cfg = cfg.train_config;
        train_cfg.seed = mix64({seed, 0x7472ULL,
                                static_cast<std::uint64_t>(
                                    kind == ModelKind::kLogisticRegression ? 1 : 2)});
        std::unique_ptr<Model> model;
        if (kind == ModelKind::kLogisticRegression) {
            model = std::make_unique<LinearModel>(
                train_logistic(fm_train, train.labels(), train_cfg));
        } else {
            model = std::make_unique<MlpModel>(
                train_mlp(fm_train, train.labels(), train_cfg));
        }
        const std::filesystem::path file =
            out / "models" /
            (std::string(model_kind_name(kind)) + "_seed" + std::to_string(seed) +
             ".xmodel");
        save_model(*model, file, train_cfg);
        std::printf("%s: train acc %.4f, test acc %.4f -> %s\n", model_kind_name(kind),
                    accuracy(*model, fm_train, train.labels()),
                    accuracy(*model, fm_test, test.labels()), file.string().c_str());
    }
    return 0;
}

int cmd_explain(const std::string& config_path, const std::string& model_path,
                const std::string& method_name_arg, std::uint64_t seed, int replicates,
                const std::string& out_path) {
    const ExperimentConfig cfg = load_config(config_path);
    const auto method = parse_method(method_name_arg);
    if (!method) throw ConfigError("unknown method '" + method_name_arg + "'");

    const Dataset data = cfg.dataset.realize();
    const auto [train, test] = stratified_split(data, cfg.test_fraction, seed);
    const auto [fm_train, fm_test] = encode_features(train, test);

    const auto model = load_model(model_path);
    if (model->dim() != fm_test.dim()) {
        throw ShapeError("checkpoint dimension " + std::to_string(model->dim()) +
                         " does not match encoded data dimension " +
                         std::to_string(fm_test.dim()));
    }

    ExplainerConfig expl_cfg = cfg.explainer_config;
    expl_cfg.kernelshap.background = fm_train.X.colwise().mean().transpose();

    std::vector<Explanation> explanations;
    for (int i = 0; i < fm_test.rows(); ++i) {
        for (int r = 0; r < replicates; ++r) {
            const std::uint64_t derived =
                mix64({seed, static_cast<std::uint64_t>(method_id(*method)),
                       static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(r)});
            explanations.push_back(
                explain(*method, *model, fm_test.X.row(i).transpose(), expl_cfg, derived, i));
        }
    }
    write_explanations(out_path, fm_test.feature_names, explanations);
    std::printf("wrote %zu explanations (%d instances x %d replicates) -> %s\n",
                explanations.size(), fm_test.rows(), replicates, out_path.c_str());
    return 0;
}

int cmd_audit(const std::string& config_path, const std::string& out_override) {
    ExperimentConfig cfg = load_config(config_path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    if (cfg.output_dir.empty()) cfg.output_dir = "xaudit_out";

    const ExperimentResult result = run_experiment(cfg);
    emit_report(result, cfg.output_dir / "report");

    int significant = 0;
    for (const auto& cell : result.cells) {
        if (cell.test.significant) ++significant;
    }
    std::printf("audit complete: %d/%zu cells significant at alpha=%g "
                "(%.1f%% | combos with any: %.1f%%), wall time %.1fs\n",
                significant, result.cells.size(), cfg.alpha,
                100.0 * result.significant_fraction,
                100.0 * result.combos_with_any_fraction, result.wall_time_seconds);
    std::printf("report bundle: %s\n", (cfg.output_dir / "report").string().c_str());
    return significant > 0 ? 2 : 0;
}

int cmd_report(const std::string& result_path, const std::vector<std::string>& formats,
               const std::string& out_dir) {
    const ExperimentResult result = load_result(result_path);
    std::set<std::string> format_set(formats.begin(), formats.end());
    if (format_set.empty()) format_set = {"csv", "md", "json"};
    emit_report(result, out_dir, format_set);
    std::printf("re-emitted report for %s -> %s\n", result.dataset_name.c_str(),
                out_dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"explanation-quality disparity auditing for tabular classifiers"};
    app.set_version_flag("--version", xaudit::kVersion);
    app.require_subcommand(1);

    std::string config_path, model_path, method, result_path, out;
    std::uint64_t seed = 0;
    int replicates = 1;
    std::vector<std::string> formats;

    auto* train = app.add_subcommand("train", "train and checkpoint the configured models");
    train->add_option("--config", config_path, "experiment config (JSON)")->required();
    train->add_option("--seed", seed, "data-split seed");
    train->add_option("--out", out, "output directory (default: config output_dir)");

    auto* explain = app.add_subcommand("explain", "dump explanations for the test set");
    explain->add_option("--config", config_path, "experiment config (JSON)")->required();
    explain->add_option("--model", model_path, "model checkpoint")->required();
    explain->add_option("--method", method,
                        "lime | shap | smoothgrad | intgrad | vanillagrad")->required();
    explain->add_option("--seed", seed, "data-split seed");
    explain->add_option("--replicates", replicates, "replicates per instance")
        ->check(CLI::PositiveNumber);
    explain->add_option("--out", out, "output CSV path")->default_val("explanations.csv");

    auto* audit = app.add_subcommand("audit", "run the full disparity audit");
    audit->add_option("--config", config_path, "experiment config (JSON)")->required();
    audit->add_option("--out", out, "output directory override");

    auto* report = app.add_subcommand("report", "re-emit reports from a result bundle");
    report->add_option("--result", result_path, "result.json from a previous audit")
        ->required();
    report->add_option("--format", formats, "csv | md | json (repeatable)");
    report->add_option("--out", out, "output directory")->default_val("xaudit_report");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(config_path, seed, out);
        if (explain->parsed()) {
            return cmd_explain(config_path, model_path, method, seed, replicates,
                               out.empty() ? "explanations.csv" : out);
        }
        if (audit->parsed()) return cmd_audit(config_path, out);
        if (report->parsed()) return cmd_report(result_path, formats, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
