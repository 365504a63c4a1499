#include "xaudit/harness.hpp"

#include "xaudit/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace xaudit {

namespace {

std::string format_pvalue(double p) {
    char buffer[16];
    std::snprintf(buffer, sizeof(buffer), "%.3f", p);
    return buffer;
}

const char* test_method_name(PValueMethod method) {
    return method == PValueMethod::kExact ? "exact" : "normal_approx";
}

PValueMethod test_method_from_name(const std::string& name) {
    if (name == "exact") return PValueMethod::kExact;
    if (name == "normal_approx") return PValueMethod::kNormalApprox;
    throw InputError("unknown test method '" + name + "'");
}

Method method_from_name(const std::string& name) {
    const auto parsed = parse_method(name);
    if (!parsed) throw InputError("unknown explainer '" + name + "'");
    return *parsed;
}

ModelKind model_from_name(const std::string& name) {
    const auto parsed = parse_model_kind(name);
    if (!parsed) throw InputError("unknown model kind '" + name + "'");
    return *parsed;
}

// Metric names in report order, across every model in the result.
std::vector<std::string> metric_order(const ExperimentResult& result) {
    std::vector<std::string> order;
    for (const auto& cell : result.cells) {
        if (std::find(order.begin(), order.end(), cell.metric) == order.end()) {
            order.push_back(cell.metric);
        }
    }
    return order;
}

std::vector<ModelKind> model_order(const ExperimentResult& result) {
    std::vector<ModelKind> order;
    for (const auto& cell : result.cells) {
        if (std::find(order.begin(), order.end(), cell.model) == order.end()) {
            order.push_back(cell.model);
        }
    }
    return order;
}

std::vector<Method> explainer_order(const ExperimentResult& result) {
    std::vector<Method> order;
    for (const auto& cell : result.cells) {
        if (std::find(order.begin(), order.end(), cell.explainer) == order.end()) {
            order.push_back(cell.explainer);
        }
    }
    return order;
}

const DisparityCell* find_cell(const ExperimentResult& result, ModelKind model,
                               Method explainer, const std::string& metric) {
    for (const auto& cell : result.cells) {
        if (cell.model == model && cell.explainer == explainer && cell.metric == metric) {
            return &cell;
        }
    }
    return nullptr;
}

void write_pvalues_csv(const ExperimentResult& result, const std::filesystem::path& path) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& cell : result.cells) {
        rows.push_back({result.dataset_name, model_kind_name(cell.model),
                        method_name(cell.explainer), cell.metric,
                        format_double(cell.test.p_value),
                        cell.test.significant ? "1" : "0",
                        format_double(cell.test.u_statistic),
                        test_method_name(cell.test.method),
                        std::to_string(cell.test.n0), std::to_string(cell.test.n1)});
    }
    write_csv(path,
              {"dataset", "model", "explainer", "metric", "p_value", "significant",
               "u_statistic", "test_method", "n0", "n1"},
              rows);
}

void write_pvalues_md(const ExperimentResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());

    out << "# Explanation-quality disparity: " << result.dataset_name << "\n\n";
    out << "Two-sided Mann-Whitney U p-values over per-trial group means ("
        << result.trial_seeds.size() << " trials). Significant cells (p < alpha) are "
        << "shown in bold.\n";

    const auto explainers = explainer_order(result);
    const auto models = model_order(result);
    for (const auto& metric : metric_order(result)) {
        out << "\n## " << metric << "\n\n";
        out << "| model |";
        for (Method e : explainers) out << " " << method_name(e) << " |";
        out << "\n|---|";
        for (std::size_t i = 0; i < explainers.size(); ++i) out << "---|";
        out << "\n";
        for (ModelKind m : models) {
            bool any = false;
            for (Method e : explainers) {
                if (find_cell(result, m, e, metric) != nullptr) any = true;
            }
            if (!any) continue;
            out << "| " << model_kind_name(m) << " |";
            for (Method e : explainers) {
                const DisparityCell* cell = find_cell(result, m, e, metric);
                if (cell == nullptr) {
                    out << " --- |";
                } else if (cell->test.significant) {
                    out << " **" << format_pvalue(cell->test.p_value) << "** |";
                } else {
                    out << " " << format_pvalue(cell->test.p_value) << " |";
                }
            }
            out << "\n";
        }
    }

    out << "\n## Significant-cell counts\n\n| model |";
    for (Method e : explainers) out << " " << method_name(e) << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < explainers.size(); ++i) out << "---|";
    out << "\n";
    for (ModelKind m : models) {
        out << "| " << model_kind_name(m) << " |";
        for (Method e : explainers) {
            int count = 0;
            for (const auto& row : result.counts) {
                if (row.model == m && row.explainer == e) count = row.significant_metrics;
            }
            out << " " << count << " |";
        }
        out << "\n";
    }

    char line[160];
    std::snprintf(line, sizeof(line),
                  "\nSignificant cells: %.1f%%; combinations with at least one "
                  "significant metric: %.1f%%.\n",
                  100.0 * result.significant_fraction,
                  100.0 * result.combos_with_any_fraction);
    out << line;
    if (!out) throw IoError("write failed for " + path.string());
}

void write_counts_csv(const ExperimentResult& result, const std::filesystem::path& path) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : result.counts) {
        rows.push_back({result.dataset_name, model_kind_name(row.model),
                        method_name(row.explainer),
                        std::to_string(row.significant_metrics)});
    }
    write_csv(path, {"dataset", "model", "explainer", "significant_metrics"}, rows);
}

void write_group_means(const ExperimentResult& result, const std::filesystem::path& long_path,
                       const std::filesystem::path& summary_path) {
    std::vector<std::vector<std::string>> long_rows;
    for (const auto& trial : result.trials) {
        for (const auto& cell : trial.cells) {
            long_rows.push_back({model_kind_name(cell.model), method_name(cell.explainer),
                                 cell.metric, "0", std::to_string(trial.trial_seed),
                                 format_double(cell.mean_group0), std::to_string(cell.n0)});
            long_rows.push_back({model_kind_name(cell.model), method_name(cell.explainer),
                                 cell.metric, "1", std::to_string(trial.trial_seed),
                                 format_double(cell.mean_group1), std::to_string(cell.n1)});
        }
    }
    write_csv(long_path, {"model", "explainer", "metric", "group", "trial_seed", "mean", "n"},
              long_rows);

    std::vector<std::vector<std::string>> summary_rows;
    for (const auto& cell : result.cells) {
        const auto emit = [&](int group, const std::vector<double>& means) {
            double mean = 0.0;
            for (double m : means) mean += m;
            mean /= static_cast<double>(means.size());
            double var = 0.0;
            for (double m : means) var += (m - mean) * (m - mean);
            var /= static_cast<double>(means.size());
            summary_rows.push_back({model_kind_name(cell.model), method_name(cell.explainer),
                                    cell.metric, std::to_string(group), format_double(mean),
                                    format_double(std::sqrt(var)),
                                    std::to_string(means.size())});
        };
        emit(0, cell.means_group0);
        emit(1, cell.means_group1);
    }
    write_csv(summary_path,
              {"model", "explainer", "metric", "group", "mean", "std", "trials"},
              summary_rows);
}

} // namespace

nlohmann::json result_to_json(const ExperimentResult& result) {
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& trial : result.trials) {
        nlohmann::json cells = nlohmann::json::array();
        for (const auto& cell : trial.cells) {
            cells.push_back({{"model", model_kind_name(cell.model)},
                             {"explainer", method_name(cell.explainer)},
                             {"metric", cell.metric},
                             {"mean_group0", cell.mean_group0},
                             {"mean_group1", cell.mean_group1},
                             {"n0", cell.n0},
                             {"n1", cell.n1},
                             {"sample_file", cell.sample_file}});
        }
        trials.push_back({{"trial_seed", trial.trial_seed}, {"cells", cells}});
    }

    nlohmann::json cells = nlohmann::json::array();
    for (const auto& cell : result.cells) {
        nlohmann::json c{{"model", model_kind_name(cell.model)},
                         {"explainer", method_name(cell.explainer)},
                         {"metric", cell.metric},
                         {"means_group0", cell.means_group0},
                         {"means_group1", cell.means_group1},
                         {"u_statistic", cell.test.u_statistic},
                         {"p_value", cell.test.p_value},
                         {"significant", cell.test.significant},
                         {"alpha", cell.test.alpha},
                         {"n0", cell.test.n0},
                         {"n1", cell.test.n1},
                         {"test_method", test_method_name(cell.test.method)}};
        if (!std::isnan(cell.test.p_normal)) c["p_normal"] = cell.test.p_normal;
        cells.push_back(std::move(c));
    }

    nlohmann::json counts = nlohmann::json::array();
    for (const auto& row : result.counts) {
        counts.push_back({{"model", model_kind_name(row.model)},
                          {"explainer", method_name(row.explainer)},
                          {"significant_metrics", row.significant_metrics}});
    }

    return nlohmann::json{
        {"config", result.config_echo},
        {"dataset", result.dataset_name},
        {"trial_seeds", result.trial_seeds},
        {"trials", trials},
        {"cells", cells},
        {"counts", counts},
        {"significant_fraction", result.significant_fraction},
        {"combos_with_any_fraction", result.combos_with_any_fraction},
        {"metadata", {{"config_hash", result.hash}, {"version", result.version}}}};
}

ExperimentResult result_from_json(const nlohmann::json& j) {
    ExperimentResult result;
    result.config_echo = j.at("config");
    result.dataset_name = j.at("dataset").get<std::string>();
    result.trial_seeds = j.at("trial_seeds").get<std::vector<std::uint64_t>>();

    for (const auto& t : j.at("trials")) {
        TrialResult trial;
        trial.trial_seed = t.at("trial_seed").get<std::uint64_t>();
        for (const auto& c : t.at("cells")) {
            GroupMetricSummary cell;
            cell.model = model_from_name(c.at("model").get<std::string>());
            cell.explainer = method_from_name(c.at("explainer").get<std::string>());
            cell.metric = c.at("metric").get<std::string>();
            cell.mean_group0 = c.at("mean_group0").get<double>();
            cell.mean_group1 = c.at("mean_group1").get<double>();
            cell.n0 = c.at("n0").get<int>();
            cell.n1 = c.at("n1").get<int>();
            cell.sample_file = c.at("sample_file").get<std::string>();
            trial.cells.push_back(std::move(cell));
        }
        result.trials.push_back(std::move(trial));
    }

    for (const auto& c : j.at("cells")) {
        DisparityCell cell;
        cell.model = model_from_name(c.at("model").get<std::string>());
        cell.explainer = method_from_name(c.at("explainer").get<std::string>());
        cell.metric = c.at("metric").get<std::string>();
        cell.means_group0 = c.at("means_group0").get<std::vector<double>>();
        cell.means_group1 = c.at("means_group1").get<std::vector<double>>();
        cell.test.u_statistic = c.at("u_statistic").get<double>();
        cell.test.p_value = c.at("p_value").get<double>();
        cell.test.significant = c.at("significant").get<bool>();
        cell.test.alpha = c.at("alpha").get<double>();
        cell.test.n0 = c.at("n0").get<int>();
        cell.test.n1 = c.at("n1").get<int>();
        cell.test.method = test_method_from_name(c.at("test_method").get<std::string>());
        if (c.contains("p_normal")) cell.test.p_normal = c.at("p_normal").get<double>();
        result.cells.push_back(std::move(cell));
    }

    for (const auto& c : j.at("counts")) {
        CountsRow row;
        row.model = model_from_name(c.at("model").get<std::string>());
        row.explainer = method_from_name(c.at("explainer").get<std::string>());
        row.significant_metrics = c.at("significant_metrics").get<int>();
        result.counts.push_back(row);
    }

    result.significant_fraction = j.at("significant_fraction").get<double>();
    result.combos_with_any_fraction = j.at("combos_with_any_fraction").get<double>();
    result.hash = j.at("metadata").at("config_hash").get<std::string>();
    result.version = j.at("metadata").at("version").get<std::string>();
    return result;
}

ExperimentResult load_result(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open result " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("result parse error in " + path.string() + ": " + e.what());
    }
    return result_from_json(j);
}

void emit_report(const ExperimentResult& result, const std::filesystem::path& dir,
                 const std::set<std::string>& formats) {
    std::filesystem::create_directories(dir);
    if (formats.count("csv") > 0) {
        write_pvalues_csv(result, dir / "pvalues.csv");
        write_counts_csv(result, dir / "counts.csv");
        write_group_means(result, dir / "group_means.csv", dir / "group_mean_summary.csv");
    }
    if (formats.count("md") > 0) {
        write_pvalues_md(result, dir / "pvalues.md");
    }
    if (formats.count("json") > 0) {
        std::ofstream out(dir / "result.json", std::ios::binary);
        if (!out) throw IoError("cannot write " + (dir / "result.json").string());
        out << result_to_json(result).dump(2) << "\n";
        if (!out) throw IoError("write failed for " + (dir / "result.json").string());
    }
}

} // namespace xaudit
