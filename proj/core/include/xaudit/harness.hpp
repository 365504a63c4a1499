#pragma once

#include "xaudit/dataio.hpp"
#include "xaudit/explainers.hpp"
#include "xaudit/metrics.hpp"
#include "xaudit/models.hpp"
#include "xaudit/stats.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace xaudit {

enum class ModelKind { kLogisticRegression, kMlp };

const char* model_kind_name(ModelKind kind); // "LR" / "NN"
std::optional<ModelKind> parse_model_kind(std::string_view name);

// Where the audit data comes from: a user-supplied CSV plus schema, or the
// deterministic synthetic generator.
struct DatasetSource {
    enum class Kind { kCsv, kSynthetic };
    Kind kind = Kind::kSynthetic;
    std::string name;    // report label; defaults to the file stem / "synthetic"
    std::filesystem::path path;
    DatasetSchema schema;
    SyntheticSpec synthetic;
    std::uint64_t synthetic_seed = 0;

    Dataset realize() const;
    std::string label() const;
};

struct ExperimentConfig {
    DatasetSource dataset;
    std::vector<ModelKind> model_kinds{ModelKind::kLogisticRegression, ModelKind::kMlp};
    std::vector<Method> explainer_kinds{kAllMethods, kAllMethods + 5};
    MetricConfig metric_config;
    ExplainerConfig explainer_config;
    TrainConfig train_config;
    int trials = 5;
    std::vector<std::uint64_t> trial_seeds; // empty: 0 .. trials-1
    double alpha = 0.05;
    double test_fraction = 0.2;
    // 0 = every test instance; otherwise the first N per group, recorded in
    // the result metadata (desk-scale runs).
    int max_instances_per_group = 0;
    std::filesystem::path output_dir;

    std::vector<std::uint64_t> resolved_trial_seeds() const;
    void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_hash(const ExperimentConfig& cfg); // FNV-1a over canonical JSON

// One per-instance metric evaluation row, as persisted to the sample CSVs.
struct SampleRow {
    ModelKind model;
    int instance_index; // index within the trial's test set
    int group;
    Method method;
    std::string metric;
    double value;
    std::uint64_t seed; // canonical seed of the (instance, method) pair
};

// Per-group means for one (model, explainer, metric) cell of one trial.
struct GroupMetricSummary {
    ModelKind model;
    Method explainer;
    std::string metric;
    double mean_group0 = 0.0;
    double mean_group1 = 0.0;
    int n0 = 0;
    int n1 = 0;
    std::string sample_file; // relative to output_dir; empty if not persisted
};

struct TrialResult {
    std::uint64_t trial_seed = 0;
    std::vector<GroupMetricSummary> cells;
    std::vector<SampleRow> samples; // in-memory copy of the persisted rows
};

struct DisparityCell {
    ModelKind model;
    Method explainer;
    std::string metric;
    std::vector<double> means_group0; // one per trial
    std::vector<double> means_group1;
    DisparityResult test;
};

struct CountsRow {
    ModelKind model;
    Method explainer;
    int significant_metrics = 0;
};

struct ExperimentResult {
    nlohmann::json config_echo;
    std::string dataset_name;
    std::vector<std::uint64_t> trial_seeds;
    std::vector<TrialResult> trials;
    std::vector<DisparityCell> cells;
    std::vector<CountsRow> counts;
    double significant_fraction = 0.0;     // significant cells / all cells
    double combos_with_any_fraction = 0.0; // (model, explainer) pairs with >= 1
    std::string hash;
    std::string version;
    double wall_time_seconds = 0.0; // in-memory only; kept out of the bundle
                                    // so identical runs emit identical bytes
};

// The canonical metric schedule: ground-truth fidelity only exists for
// linear models.
std::vector<std::string> metrics_for(ModelKind kind);

// Runs one trial: split with the trial seed, encode, train the configured
// models, explain every scheduled test instance with every configured method,
// evaluate the metric schedule, and average per group. All randomness derives
// from trial_seed via mix64:
//
//   training seed             mix64(trial_seed, 0x7472, model_id)
//   canonical instance seed   mix64(trial_seed, method_id, instance, 0)
//   inconsistency replicas    mix64(trial_seed, method_id, instance, r)
//   instability replicas      canonical + r   (successor seeds)
//
// Sample CSVs land under output_dir/samples/ when output_dir is set.
TrialResult run_trial(const ExperimentConfig& cfg, std::uint64_t trial_seed);

// All trials, the per-cell disparity tests over the per-trial group means,
// and the significance counts.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// One cell of a generic p-value grid (possibly ingested from external data).
struct PValueCell {
    std::string dataset;
    std::string model;
    std::string explainer;
    std::string metric;
    double p_value;
};

struct CountsTable {
    struct Row {
        std::string dataset;
        std::string model;
        std::string explainer;
        int significant_metrics;
    };
    std::vector<Row> rows;
    int significant_cells = 0;
    int total_cells = 0;
    double significant_fraction = 0.0;
    int combos_with_any = 0;
    int total_combos = 0;
    double combos_with_any_fraction = 0.0;
};

// Counts significant cells per (dataset, model, explainer). The grid must be
// complete: every triple sharing a model label must carry the same metric
// set, and no cell may repeat.
CountsTable aggregate_counts(const std::vector<PValueCell>& grid, double alpha);

// Report emission (report.cpp). Formats: any subset of {"csv", "md", "json"}.
void emit_report(const ExperimentResult& result, const std::filesystem::path& dir,
                 const std::set<std::string>& formats = {"csv", "md", "json"});
nlohmann::json result_to_json(const ExperimentResult& result);
ExperimentResult result_from_json(const nlohmann::json& j);
ExperimentResult load_result(const std::filesystem::path& path);

// Explanation dump: one row per (instance, method, replicate), d importance
// columns in feature_names order.
void write_explanations(const std::filesystem::path& path,
                        const std::vector<std::string>& feature_names,
                        const std::vector<Explanation>& explanations);

} // namespace xaudit
