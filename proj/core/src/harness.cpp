#include "xaudit/harness.hpp"

#include "xaudit/csv.hpp"
#include "xaudit/parallel.hpp"
#include "xaudit/rng.hpp"
#include "xaudit/version.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

namespace xaudit {

const char* model_kind_name(ModelKind kind) {
    return kind == ModelKind::kLogisticRegression ? "LR" : "NN";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "lr" || lower == "logistic" || lower == "logistic_regression") {
        return ModelKind::kLogisticRegression;
    }
    if (lower == "nn" || lower == "mlp") return ModelKind::kMlp;
    return std::nullopt;
}

namespace {

int model_id(ModelKind kind) { return kind == ModelKind::kLogisticRegression ? 1 : 2; }

constexpr std::uint64_t kTrainTag = 0x7472ULL; // "tr"

} // namespace

Dataset DatasetSource::realize() const {
    if (kind == Kind::kCsv) return load_dataset(path, schema);
    return generate_synthetic(synthetic, synthetic_seed);
}

std::string DatasetSource::label() const {
    if (!name.empty()) return name;
    if (kind == Kind::kCsv) return path.stem().string();
    return "synthetic";
}

std::vector<std::uint64_t> ExperimentConfig::resolved_trial_seeds() const {
    if (!trial_seeds.empty()) return trial_seeds;
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(trials));
    std::iota(seeds.begin(), seeds.end(), std::uint64_t{0});
    return seeds;
}

void ExperimentConfig::validate() const {
    if (trials < 1) throw ConfigError("trials must be at least 1");
    if (!trial_seeds.empty() && static_cast<int>(trial_seeds.size()) != trials) {
        throw ConfigError("trial_seeds length must equal trials");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0, 1)");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("test_fraction must be in (0, 1)");
    }
    if (model_kinds.empty()) throw ConfigError("no model kinds configured");
    if (explainer_kinds.empty()) throw ConfigError("no explainers configured");
    std::set<int> seen_models, seen_methods;
    for (ModelKind kind : model_kinds) {
        if (!seen_models.insert(model_id(kind)).second) {
            throw ConfigError("duplicate model kind");
        }
    }
    for (Method method : explainer_kinds) {
        if (!seen_methods.insert(method_id(method)).second) {
            throw ConfigError("duplicate explainer");
        }
    }
    if (max_instances_per_group < 0) {
        throw ConfigError("max_instances_per_group must be non-negative");
    }
    train_config.validate();
}

std::vector<std::string> metrics_for(ModelKind kind) {
    if (kind == ModelKind::kLogisticRegression) {
        return {kMetricGroundTruthFidelity, kMetricPredictionGap, kMetricComplexity,
                kMetricInstability, kMetricInconsistency};
    }
    return {kMetricPredictionGap, kMetricComplexity, kMetricInstability,
            kMetricInconsistency};
}

// ---------------------------------------------------------------------------
// Config JSON
// ---------------------------------------------------------------------------

namespace {

FeatureKind feature_kind_from_string(const std::string& s) {
    if (s == "continuous") return FeatureKind::kContinuous;
    if (s == "categorical") return FeatureKind::kCategorical;
    throw ConfigError("unknown feature kind '" + s + "'");
}

DatasetSchema schema_from_json(const nlohmann::json& j) {
    DatasetSchema schema;
    schema.target_column = j.at("target").get<std::string>();
    schema.positive_label = j.at("positive_label").get<std::string>();
    schema.sensitive_column = j.at("sensitive").get<std::string>();
    schema.group0_value = j.at("group0").get<std::string>();
    schema.group1_value = j.at("group1").get<std::string>();
    for (const auto& f : j.at("features")) {
        schema.feature_columns.push_back(
            {f.at("name").get<std::string>(),
             feature_kind_from_string(f.at("kind").get<std::string>())});
    }
    schema.include_sensitive_as_feature = j.value("include_sensitive_as_feature", false);
    return schema;
}

nlohmann::json schema_to_json(const DatasetSchema& schema) {
    nlohmann::json features = nlohmann::json::array();
    for (const auto& f : schema.feature_columns) {
        features.push_back(
            {{"name", f.name},
             {"kind", f.kind == FeatureKind::kContinuous ? "continuous" : "categorical"}});
    }
    nlohmann::json j{{"target", schema.target_column},
                     {"positive_label", schema.positive_label},
                     {"sensitive", schema.sensitive_column},
                     {"group0", schema.group0_value},
                     {"group1", schema.group1_value},
                     {"features", features}};
    if (schema.include_sensitive_as_feature) j["include_sensitive_as_feature"] = true;
    return j;
}

SyntheticSpec synthetic_from_json(const nlohmann::json& j) {
    SyntheticSpec spec;
    spec.n = j.at("n").get<int>();
    spec.d_continuous = j.at("d").get<int>();
    spec.group1_fraction = j.value("group1_fraction", spec.group1_fraction);
    const std::string rule = j.value("rule", std::string("shared_linear"));
    if (rule == "shared_linear") {
        spec.rule = LabelRule::kSharedLinear;
    } else if (rule == "group_dependent_nonlinear") {
        spec.rule = LabelRule::kGroupDependentNonlinear;
    } else {
        throw ConfigError("unknown synthetic rule '" + rule + "'");
    }
    spec.noise = j.value("noise", spec.noise);
    if (j.contains("logit_weights")) {
        spec.logit_weights = j.at("logit_weights").get<std::vector<double>>();
    }
    spec.intercept = j.value("intercept", spec.intercept);
    spec.xor_strength = j.value("xor_strength", spec.xor_strength);
    return spec;
}

nlohmann::json synthetic_to_json(const SyntheticSpec& spec) {
    nlohmann::json j{{"n", spec.n},
                     {"d", spec.d_continuous},
                     {"group1_fraction", spec.group1_fraction},
                     {"rule", spec.rule == LabelRule::kSharedLinear
                                  ? "shared_linear"
                                  : "group_dependent_nonlinear"},
                     {"noise", spec.noise},
                     {"intercept", spec.intercept},
                     {"xor_strength", spec.xor_strength}};
    if (!spec.logit_weights.empty()) j["logit_weights"] = spec.logit_weights;
    return j;
}

} // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;

    const auto& ds = j.at("dataset");
    const std::string kind = ds.value("kind", std::string("csv"));
    if (kind == "csv") {
        cfg.dataset.kind = DatasetSource::Kind::kCsv;
        cfg.dataset.path = ds.at("path").get<std::string>();
        cfg.dataset.schema = schema_from_json(ds.at("schema"));
    } else if (kind == "synthetic") {
        cfg.dataset.kind = DatasetSource::Kind::kSynthetic;
        cfg.dataset.synthetic = synthetic_from_json(ds);
        cfg.dataset.synthetic_seed = ds.value("seed", std::uint64_t{0});
    } else {
        throw ConfigError("unknown dataset kind '" + kind + "'");
    }
    cfg.dataset.name = ds.value("name", std::string());

    if (j.contains("models")) {
        cfg.model_kinds.clear();
        for (const auto& m : j.at("models")) {
            const auto parsed = parse_model_kind(m.get<std::string>());
            if (!parsed) throw ConfigError("unknown model kind '" + m.get<std::string>() + "'");
            cfg.model_kinds.push_back(*parsed);
        }
    }
    if (j.contains("explainers")) {
        cfg.explainer_kinds.clear();
        for (const auto& e : j.at("explainers")) {
            const auto parsed = parse_method(e.get<std::string>());
            if (!parsed) throw ConfigError("unknown explainer '" + e.get<std::string>() + "'");
            cfg.explainer_kinds.push_back(*parsed);
        }
    }

    if (j.contains("metrics")) {
        const auto& m = j.at("metrics");
        cfg.metric_config.k = m.value("k", cfg.metric_config.k);
        cfg.metric_config.m_pred_gap = m.value("m_pred_gap", cfg.metric_config.m_pred_gap);
        cfg.metric_config.sigma = m.value("sigma", cfg.metric_config.sigma);
        cfg.metric_config.m_stability = m.value("m_stability", cfg.metric_config.m_stability);
        cfg.metric_config.m_consistency =
            m.value("m_consistency", cfg.metric_config.m_consistency);
        cfg.metric_config.t = m.value("t", cfg.metric_config.t);
        cfg.metric_config.signed_importances =
            m.value("signed_importances", cfg.metric_config.signed_importances);
        cfg.metric_config.noise_on_onehot =
            m.value("noise_on_onehot", cfg.metric_config.noise_on_onehot);
    }

    if (j.contains("explainer_config")) {
        const auto& e = j.at("explainer_config");
        if (e.contains("smoothgrad")) {
            cfg.explainer_config.smoothgrad.noise_std =
                e["smoothgrad"].value("noise_std", cfg.explainer_config.smoothgrad.noise_std);
            cfg.explainer_config.smoothgrad.samples =
                e["smoothgrad"].value("samples", cfg.explainer_config.smoothgrad.samples);
        }
        if (e.contains("intgrad")) {
            cfg.explainer_config.intgrad.steps =
                e["intgrad"].value("steps", cfg.explainer_config.intgrad.steps);
        }
        if (e.contains("lime")) {
            cfg.explainer_config.lime.samples =
                e["lime"].value("samples", cfg.explainer_config.lime.samples);
            cfg.explainer_config.lime.kernel_width =
                e["lime"].value("kernel_width", cfg.explainer_config.lime.kernel_width);
            cfg.explainer_config.lime.ridge_penalty =
                e["lime"].value("ridge_penalty", cfg.explainer_config.lime.ridge_penalty);
            cfg.explainer_config.lime.perturb_std =
                e["lime"].value("perturb_std", cfg.explainer_config.lime.perturb_std);
        }
        if (e.contains("kernelshap")) {
            cfg.explainer_config.kernelshap.samples =
                e["kernelshap"].value("samples", cfg.explainer_config.kernelshap.samples);
        }
    }

    if (j.contains("train")) {
        const auto& t = j.at("train");
        cfg.train_config.epochs = t.value("epochs", cfg.train_config.epochs);
        cfg.train_config.batch_size = t.value("batch_size", cfg.train_config.batch_size);
        cfg.train_config.learning_rate =
            t.value("learning_rate", cfg.train_config.learning_rate);
        cfg.train_config.l2_penalty = t.value("l2_penalty", cfg.train_config.l2_penalty);
    }

    cfg.trials = j.value("trials", cfg.trials);
    if (j.contains("trial_seeds")) {
        cfg.trial_seeds = j.at("trial_seeds").get<std::vector<std::uint64_t>>();
    }
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.test_fraction = j.value("test_fraction", cfg.test_fraction);
    cfg.max_instances_per_group =
        j.value("max_instances_per_group", cfg.max_instances_per_group);
    if (j.contains("output_dir")) {
        cfg.output_dir = j.at("output_dir").get<std::string>();
    }

    cfg.validate();
    return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json ds;
    if (cfg.dataset.kind == DatasetSource::Kind::kCsv) {
        ds["kind"] = "csv";
        ds["path"] = cfg.dataset.path.string();
        ds["schema"] = schema_to_json(cfg.dataset.schema);
    } else {
        ds = synthetic_to_json(cfg.dataset.synthetic);
        ds["kind"] = "synthetic";
        ds["seed"] = cfg.dataset.synthetic_seed;
    }
    if (!cfg.dataset.name.empty()) ds["name"] = cfg.dataset.name;

    nlohmann::json models = nlohmann::json::array();
    for (ModelKind kind : cfg.model_kinds) models.push_back(model_kind_name(kind));
    nlohmann::json explainers = nlohmann::json::array();
    for (Method m : cfg.explainer_kinds) explainers.push_back(method_name(m));

    nlohmann::json j;
    j["dataset"] = ds;
    j["models"] = models;
    j["explainers"] = explainers;
    j["metrics"] = {{"k", cfg.metric_config.k},
                    {"m_pred_gap", cfg.metric_config.m_pred_gap},
                    {"sigma", cfg.metric_config.sigma},
                    {"m_stability", cfg.metric_config.m_stability},
                    {"m_consistency", cfg.metric_config.m_consistency},
                    {"t", cfg.metric_config.t},
                    {"signed_importances", cfg.metric_config.signed_importances},
                    {"noise_on_onehot", cfg.metric_config.noise_on_onehot}};
    j["explainer_config"] = {
        {"smoothgrad",
         {{"noise_std", cfg.explainer_config.smoothgrad.noise_std},
          {"samples", cfg.explainer_config.smoothgrad.samples}}},
        {"intgrad", {{"steps", cfg.explainer_config.intgrad.steps}}},
        {"lime",
         {{"samples", cfg.explainer_config.lime.samples},
          {"kernel_width", cfg.explainer_config.lime.kernel_width},
          {"ridge_penalty", cfg.explainer_config.lime.ridge_penalty},
          {"perturb_std", cfg.explainer_config.lime.perturb_std}}},
        {"kernelshap", {{"samples", cfg.explainer_config.kernelshap.samples}}}};
    j["train"] = {{"epochs", cfg.train_config.epochs},
                  {"batch_size", cfg.train_config.batch_size},
                  {"learning_rate", cfg.train_config.learning_rate},
                  {"l2_penalty", cfg.train_config.l2_penalty}};
    j["trials"] = cfg.trials;
    j["trial_seeds"] = cfg.resolved_trial_seeds();
    j["alpha"] = cfg.alpha;
    j["test_fraction"] = cfg.test_fraction;
    j["max_instances_per_group"] = cfg.max_instances_per_group;
    j["output_dir"] = cfg.output_dir.string();
    return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string text = config_to_json(cfg).dump();
    std::uint64_t hash = 0xCBF29CE484222325ULL; // FNV-1a
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001B3ULL;
    }
    char buffer[17];
    std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
    return buffer;
}

// ---------------------------------------------------------------------------
// Trial execution
// ---------------------------------------------------------------------------

namespace {

struct ScheduledInstance {
    int test_index;
    int group;
};

std::vector<ScheduledInstance> schedule_instances(const GroupSplit& split, int cap) {
    std::vector<ScheduledInstance> scheduled;
    const auto take = [&](const std::vector<int>& members, int group) {
        const std::size_t limit =
            cap > 0 ? std::min(members.size(), static_cast<std::size_t>(cap))
                    : members.size();
        for (std::size_t i = 0; i < limit; ++i) scheduled.push_back({members[i], group});
    };
    take(split.group0, 0);
    take(split.group1, 1);
    return scheduled;
}

} // namespace

TrialResult run_trial(const ExperimentConfig& cfg, std::uint64_t trial_seed) {
    cfg.validate();

    const Dataset data = cfg.dataset.realize();
    auto [train, test] = stratified_split(data, cfg.test_fraction, trial_seed);
    auto [fm_train, fm_test] = encode_features(train, test);
    const int d = fm_train.dim();
    cfg.metric_config.validate(d);

    GroupSplit split;
    try {
        split = partition_by_group(test);
    } catch (const GroupCoverageError& e) {
        throw GroupCoverageError("trial " + std::to_string(trial_seed) + ": " + e.what());
    }
    const auto scheduled = schedule_instances(split, cfg.max_instances_per_group);

    ExplainerConfig expl_cfg = cfg.explainer_config;
    expl_cfg.kernelshap.background = fm_train.X.colwise().mean().transpose();

    TrialResult result;
    result.trial_seed = trial_seed;

    for (ModelKind kind : cfg.model_kinds) {
        TrainConfig train_cfg = cfg.train_config;
        train_cfg.seed = mix64({trial_seed, kTrainTag,
                                static_cast<std::uint64_t>(model_id(kind))});

        std::unique_ptr<Model> model;
        Eigen::VectorXd omega;
        if (kind == ModelKind::kLogisticRegression) {
            auto lr = std::make_unique<LinearModel>(
                train_logistic(fm_train, train.labels(), train_cfg));
            omega = ground_truth_weights(*lr);
            model = std::move(lr);
        } else {
            model = std::make_unique<MlpModel>(
                train_mlp(fm_train, train.labels(), train_cfg));
        }

        const auto metric_names = metrics_for(kind);
        std::vector<std::vector<SampleRow>> slot_rows(scheduled.size());

        parallel_for(scheduled.size(), [&](std::size_t slot) {
            const ScheduledInstance inst = scheduled[slot];
            const Eigen::VectorXd x = fm_test.X.row(inst.test_index).transpose();
            auto& rows = slot_rows[slot];

            for (Method method : cfg.explainer_kinds) {
                const std::uint64_t canonical =
                    mix64({trial_seed, static_cast<std::uint64_t>(method_id(method)),
                           static_cast<std::uint64_t>(inst.test_index), 0});
                const Explanation expl =
                    explain(method, *model, x, expl_cfg, canonical, inst.test_index);
                const ExplainFn explain_fn = [&](const Eigen::VectorXd& point,
                                                 std::uint64_t seed) {
                    return explain(method, *model, point, expl_cfg, seed).importances;
                };

                auto push = [&](const char* metric, double value) {
                    rows.push_back({kind, inst.test_index, inst.group, method, metric,
                                    value, canonical});
                };

                if (kind == ModelKind::kLogisticRegression) {
                    push(kMetricGroundTruthFidelity,
                         ground_truth_fidelity(expl.importances, omega, cfg.metric_config.k,
                                               cfg.metric_config.signed_importances));
                }
                push(kMetricPredictionGap,
                     prediction_gap(*model, x, expl.importances, cfg.metric_config,
                                    canonical, fm_test.column_kinds));
                push(kMetricComplexity,
                     static_cast<double>(complexity(expl.importances, cfg.metric_config)));
                push(kMetricInstability,
                     instability(x, explain_fn, cfg.metric_config, canonical,
                                 &expl.importances));
                std::vector<std::uint64_t> seeds;
                seeds.push_back(canonical);
                for (int r = 1; r <= cfg.metric_config.m_consistency; ++r) {
                    seeds.push_back(
                        mix64({trial_seed, static_cast<std::uint64_t>(method_id(method)),
                               static_cast<std::uint64_t>(inst.test_index),
                               static_cast<std::uint64_t>(r)}));
                }
                push(kMetricInconsistency,
                     inconsistency(x, explain_fn, seeds, &expl.importances));
            }
        });

        std::vector<SampleRow> samples;
        for (auto& rows : slot_rows) {
            samples.insert(samples.end(), rows.begin(), rows.end());
        }

        std::string sample_file;
        if (!cfg.output_dir.empty()) {
            const std::filesystem::path dir = cfg.output_dir / "samples";
            std::filesystem::create_directories(dir);
            sample_file = "samples/trial_" + std::to_string(trial_seed) + "_" +
                          model_kind_name(kind) + ".csv";
            std::vector<std::vector<std::string>> rows;
            for (const auto& s : samples) {
                rows.push_back({std::to_string(s.instance_index), std::to_string(s.group),
                                method_name(s.method), s.metric, format_double(s.value),
                                std::to_string(s.seed)});
            }
            write_csv(cfg.output_dir / sample_file,
                      {"instance_index", "group", "method", "metric", "value", "seed"},
                      rows);
        }

        // Per-group means in sample (index) order.
        for (Method method : cfg.explainer_kinds) {
            for (const auto& metric : metric_names) {
                GroupMetricSummary cell;
                cell.model = kind;
                cell.explainer = method;
                cell.metric = metric;
                cell.sample_file = sample_file;
                double sum0 = 0.0, sum1 = 0.0;
                for (const auto& s : samples) {
                    if (s.method != method || s.metric != metric) continue;
                    if (s.group == 0) {
                        sum0 += s.value;
                        ++cell.n0;
                    } else {
                        sum1 += s.value;
                        ++cell.n1;
                    }
                }
                if (cell.n0 == 0 || cell.n1 == 0) {
                    throw GroupCoverageError("trial " + std::to_string(trial_seed) +
                                             ": a group has no metric samples");
                }
                cell.mean_group0 = sum0 / static_cast<double>(cell.n0);
                cell.mean_group1 = sum1 / static_cast<double>(cell.n1);
                result.cells.push_back(std::move(cell));
            }
        }
        result.samples.insert(result.samples.end(), samples.begin(), samples.end());
    }
    return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();

    ExperimentResult result;
    result.config_echo = config_to_json(cfg);
    result.dataset_name = cfg.dataset.label();
    result.trial_seeds = cfg.resolved_trial_seeds();
    result.hash = config_hash(cfg);
    result.version = kVersion;

    for (std::uint64_t seed : result.trial_seeds) {
        result.trials.push_back(run_trial(cfg, seed));
    }

    const int trials = static_cast<int>(result.trial_seeds.size());
    for (ModelKind kind : cfg.model_kinds) {
        for (Method method : cfg.explainer_kinds) {
            for (const auto& metric : metrics_for(kind)) {
                DisparityCell cell;
                cell.model = kind;
                cell.explainer = method;
                cell.metric = metric;
                for (const auto& trial : result.trials) {
                    for (const auto& summary : trial.cells) {
                        if (summary.model == kind && summary.explainer == method &&
                            summary.metric == metric) {
                            cell.means_group0.push_back(summary.mean_group0);
                            cell.means_group1.push_back(summary.mean_group1);
                        }
                    }
                }
                cell.test = test_disparity(cell.means_group0, cell.means_group1, cfg.alpha,
                                           trials);
                result.cells.push_back(std::move(cell));
            }
        }
    }

    int significant = 0;
    int combos_with_any = 0;
    for (ModelKind kind : cfg.model_kinds) {
        for (Method method : cfg.explainer_kinds) {
            CountsRow row;
            row.model = kind;
            row.explainer = method;
            for (const auto& cell : result.cells) {
                if (cell.model == kind && cell.explainer == method && cell.test.significant) {
                    ++row.significant_metrics;
                }
            }
            significant += row.significant_metrics;
            if (row.significant_metrics > 0) ++combos_with_any;
            result.counts.push_back(row);
        }
    }
    result.significant_fraction =
        result.cells.empty()
            ? 0.0
            : static_cast<double>(significant) / static_cast<double>(result.cells.size());
    const int combos = static_cast<int>(cfg.model_kinds.size() * cfg.explainer_kinds.size());
    result.combos_with_any_fraction =
        combos == 0 ? 0.0 : static_cast<double>(combos_with_any) / static_cast<double>(combos);

    result.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

// ---------------------------------------------------------------------------
// Counts aggregation
// ---------------------------------------------------------------------------

CountsTable aggregate_counts(const std::vector<PValueCell>& grid, double alpha) {
    if (grid.empty()) throw InputError("aggregate_counts: empty grid");

    using TripleKey = std::tuple<std::string, std::string, std::string>;
    std::vector<TripleKey> triple_order;
    std::map<TripleKey, std::map<std::string, double>> triples;
    std::map<std::string, std::set<std::string>> metrics_by_model;

    for (const auto& cell : grid) {
        const TripleKey key{cell.dataset, cell.model, cell.explainer};
        auto [it, inserted] = triples.try_emplace(key);
        if (inserted) triple_order.push_back(key);
        if (!it->second.emplace(cell.metric, cell.p_value).second) {
            throw InputError("duplicate grid cell for " + cell.dataset + "/" + cell.model +
                             "/" + cell.explainer + "/" + cell.metric);
        }
        metrics_by_model[cell.model].insert(cell.metric);
    }

    // Every triple must carry the full metric set observed for its model.
    for (const auto& key : triple_order) {
        const auto& have = triples.at(key);
        const auto& want = metrics_by_model.at(std::get<1>(key));
        if (have.size() != want.size()) {
            throw IncompleteGridError("grid incomplete at " + std::get<0>(key) + "/" +
                                      std::get<1>(key) + "/" + std::get<2>(key));
        }
    }

    CountsTable table;
    std::set<TripleKey> counted;
    for (const auto& key : triple_order) {
        CountsTable::Row row;
        row.dataset = std::get<0>(key);
        row.model = std::get<1>(key);
        row.explainer = std::get<2>(key);
        row.significant_metrics = 0;
        for (const auto& [metric, p] : triples.at(key)) {
            ++table.total_cells;
            if (p < alpha) {
                ++row.significant_metrics;
                ++table.significant_cells;
            }
        }
        ++table.total_combos;
        if (row.significant_metrics > 0) ++table.combos_with_any;
        table.rows.push_back(std::move(row));
    }
    table.significant_fraction = static_cast<double>(table.significant_cells) /
                                 static_cast<double>(table.total_cells);
    table.combos_with_any_fraction = static_cast<double>(table.combos_with_any) /
                                     static_cast<double>(table.total_combos);
    return table;
}

// ---------------------------------------------------------------------------
// Explanation dump
// ---------------------------------------------------------------------------

void write_explanations(const std::filesystem::path& path,
                        const std::vector<std::string>& feature_names,
                        const std::vector<Explanation>& explanations) {
    std::vector<std::string> header{"instance_index", "method", "replicate", "seed"};
    header.insert(header.end(), feature_names.begin(), feature_names.end());

    std::map<std::pair<int, int>, int> replicate_counter;
    std::vector<std::vector<std::string>> rows;
    for (const auto& e : explanations) {
        if (e.importances.size() != static_cast<Eigen::Index>(feature_names.size())) {
            throw ShapeError("explanation length does not match feature names");
        }
        const int replicate =
            replicate_counter[{e.instance_index, method_id(e.method)}]++;
        std::vector<std::string> row{std::to_string(e.instance_index),
                                     method_name(e.method), std::to_string(replicate),
                                     std::to_string(e.seed)};
        for (Eigen::Index j = 0; j < e.importances.size(); ++j) {
            row.push_back(format_double(e.importances(j)));
        }
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

} // namespace xaudit
