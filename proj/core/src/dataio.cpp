#include "xaudit/dataio.hpp"

#include "xaudit/csv.hpp"
#include "xaudit/mathutil.hpp"
#include "xaudit/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <string_view>

namespace xaudit {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

bool is_missing(std::string_view cell) {
    return cell.empty() || cell == "NA" || cell == "?";
}

double parse_numeric(std::string_view cell, const std::string& column, std::size_t row) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        throw InputError("row " + std::to_string(row) + ", column '" + column +
                         "': cannot parse '" + std::string(cell) + "' as a number");
    }
    return value;
}

} // namespace

void DatasetSchema::validate() const {
    if (target_column.empty()) throw SchemaError("target column name is empty");
    if (sensitive_column.empty()) throw SchemaError("sensitive column name is empty");
    if (group0_value == group1_value) {
        throw SchemaError("group0 and group1 must be distinct values");
    }
    if (feature_columns.empty()) throw SchemaError("no feature columns configured");
    std::set<std::string> seen;
    for (const auto& f : feature_columns) {
        if (f.name.empty()) throw SchemaError("feature with empty name");
        if (!seen.insert(f.name).second) {
            throw SchemaError("duplicate feature column '" + f.name + "'");
        }
        if (f.name == target_column) {
            throw SchemaError("target column '" + f.name + "' listed as a feature");
        }
        if (f.name == sensitive_column && !include_sensitive_as_feature) {
            throw SchemaError("sensitive column '" + f.name +
                              "' listed as a feature without include_sensitive_as_feature");
        }
    }
}

Dataset::Dataset(DatasetSchema schema, std::vector<RawColumn> columns,
                 std::vector<int> labels, std::vector<int> groups,
                 int skipped_sensitive_rows)
    : schema_(std::move(schema)),
      columns_(std::move(columns)),
      labels_(std::move(labels)),
      groups_(std::move(groups)),
      skipped_sensitive_rows_(skipped_sensitive_rows) {
    schema_.validate();
    if (labels_.empty()) throw EmptyDatasetError("dataset has no rows");
    if (groups_.size() != labels_.size()) {
        throw ShapeError("labels and groups length mismatch");
    }
    if (columns_.size() != schema_.feature_columns.size()) {
        throw ShapeError("column count does not match schema");
    }
    const std::size_t n = labels_.size();
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        const bool continuous = schema_.feature_columns[c].kind == FeatureKind::kContinuous;
        const std::size_t len = continuous ? columns_[c].numeric.size()
                                           : columns_[c].category.size();
        if (len != n) {
            throw ShapeError("column '" + schema_.feature_columns[c].name +
                             "' has wrong length");
        }
    }
    for (int y : labels_) {
        if (y != 0 && y != 1) throw InputError("labels must be 0/1");
    }
    for (int s : groups_) {
        if (s != 0 && s != 1) throw InputError("groups must be 0/1");
    }
}

Dataset Dataset::subset(const std::vector<int>& indices) const {
    std::vector<RawColumn> columns(columns_.size());
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        const bool continuous = schema_.feature_columns[c].kind == FeatureKind::kContinuous;
        for (int i : indices) {
            if (i < 0 || i >= size()) throw InputError("subset index out of range");
            if (continuous) {
                columns[c].numeric.push_back(columns_[c].numeric[i]);
            } else {
                columns[c].category.push_back(columns_[c].category[i]);
            }
        }
    }
    std::vector<int> labels, groups;
    labels.reserve(indices.size());
    groups.reserve(indices.size());
    for (int i : indices) {
        labels.push_back(labels_[i]);
        groups.push_back(groups_[i]);
    }
    return Dataset(schema_, std::move(columns), std::move(labels), std::move(groups));
}

Dataset load_dataset(const std::filesystem::path& path, const DatasetSchema& schema) {
    DatasetSchema effective = schema;
    if (effective.include_sensitive_as_feature) {
        bool listed = false;
        for (const auto& f : effective.feature_columns) {
            if (f.name == effective.sensitive_column) listed = true;
        }
        if (!listed) {
            effective.feature_columns.push_back(
                {effective.sensitive_column, FeatureKind::kCategorical});
        }
    }
    effective.validate();

    const CsvTable table = read_csv(path);

    const int target_idx = table.column_index(effective.target_column);
    if (target_idx < 0) {
        throw SchemaError("missing target column '" + effective.target_column + "'");
    }
    const int sensitive_idx = table.column_index(effective.sensitive_column);
    if (sensitive_idx < 0) {
        throw SchemaError("missing sensitive column '" + effective.sensitive_column + "'");
    }
    std::vector<int> feature_idx;
    for (const auto& f : effective.feature_columns) {
        const int idx = table.column_index(f.name);
        if (idx < 0) throw SchemaError("missing feature column '" + f.name + "'");
        feature_idx.push_back(idx);
    }

    std::vector<RawColumn> columns(effective.feature_columns.size());
    std::vector<int> labels, groups;
    int skipped_sensitive = 0;

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string_view target = trim(row[static_cast<std::size_t>(target_idx)]);
        const std::string_view sensitive = trim(row[static_cast<std::size_t>(sensitive_idx)]);

        bool missing = is_missing(target) || is_missing(sensitive);
        for (std::size_t c = 0; c < feature_idx.size() && !missing; ++c) {
            missing = is_missing(trim(row[static_cast<std::size_t>(feature_idx[c])]));
        }
        if (missing) continue; // na_policy: drop_row

        int group;
        if (sensitive == effective.group0_value) {
            group = 0;
        } else if (sensitive == effective.group1_value) {
            group = 1;
        } else {
            ++skipped_sensitive;
            continue;
        }

        for (std::size_t c = 0; c < feature_idx.size(); ++c) {
            const std::string_view cell = trim(row[static_cast<std::size_t>(feature_idx[c])]);
            if (effective.feature_columns[c].kind == FeatureKind::kContinuous) {
                columns[c].numeric.push_back(
                    parse_numeric(cell, effective.feature_columns[c].name, r + 2));
            } else {
                columns[c].category.emplace_back(cell);
            }
        }
        labels.push_back(target == effective.positive_label ? 1 : 0);
        groups.push_back(group);
    }

    if (labels.empty()) {
        throw EmptyDatasetError("no usable rows in " + path.string());
    }
    return Dataset(std::move(effective), std::move(columns), std::move(labels),
                   std::move(groups), skipped_sensitive);
}

namespace {

struct FittedColumn {
    ColumnStats stats;                // continuous
    std::vector<std::string> levels;  // categorical, sorted
};

FeatureMatrix transform(const Dataset& data, const std::vector<FittedColumn>& fitted,
                        int dim) {
    const auto& features = data.schema().feature_columns;
    FeatureMatrix out;
    out.X.resize(data.size(), dim);
    out.feature_names.reserve(static_cast<std::size_t>(dim));
    out.column_kinds.reserve(static_cast<std::size_t>(dim));
    out.standardization.reserve(static_cast<std::size_t>(dim));

    int col = 0;
    for (std::size_t c = 0; c < features.size(); ++c) {
        if (features[c].kind == FeatureKind::kContinuous) {
            const auto& stats = fitted[c].stats;
            for (int i = 0; i < data.size(); ++i) {
                out.X(i, col) = (data.columns()[c].numeric[i] - stats.mean) / stats.stddev;
            }
            out.feature_names.push_back(features[c].name);
            out.column_kinds.push_back(ColumnKind::kNumeric);
            out.standardization.push_back(stats);
            ++col;
        } else {
            const auto& levels = fitted[c].levels;
            const int base = col;
            for (const auto& level : levels) {
                out.feature_names.push_back(features[c].name + "=" + level);
                out.column_kinds.push_back(ColumnKind::kOneHot);
                out.standardization.push_back(ColumnStats{});
            }
            for (int i = 0; i < data.size(); ++i) {
                for (std::size_t l = 0; l < levels.size(); ++l) {
                    out.X(i, base + static_cast<int>(l)) = 0.0;
                }
                const auto& value = data.columns()[c].category[i];
                const auto it = std::lower_bound(levels.begin(), levels.end(), value);
                if (it != levels.end() && *it == value) {
                    out.X(i, base + static_cast<int>(it - levels.begin())) = 1.0;
                }
                // unseen level: all-zeros block
            }
            col += static_cast<int>(levels.size());
        }
    }
    return out;
}

} // namespace

std::pair<FeatureMatrix, FeatureMatrix> encode_features(const Dataset& train,
                                                        const Dataset& test) {
    const auto& tf = train.schema().feature_columns;
    const auto& sf = test.schema().feature_columns;
    if (tf.size() != sf.size()) throw SchemaError("train/test schemas differ");
    for (std::size_t c = 0; c < tf.size(); ++c) {
        if (tf[c].name != sf[c].name || tf[c].kind != sf[c].kind) {
            throw SchemaError("train/test schemas differ at column '" + tf[c].name + "'");
        }
    }

    std::vector<FittedColumn> fitted(tf.size());
    int dim = 0;
    for (std::size_t c = 0; c < tf.size(); ++c) {
        if (tf[c].kind == FeatureKind::kContinuous) {
            const auto& values = train.columns()[c].numeric;
            const double n = static_cast<double>(values.size());
            double mean = 0.0;
            for (double v : values) mean += v;
            mean /= n;
            double var = 0.0;
            for (double v : values) var += (v - mean) * (v - mean);
            var /= n;
            const double stddev = std::sqrt(var);
            fitted[c].stats.mean = mean;
            fitted[c].stats.stddev = stddev > 0.0 ? stddev : 1.0;
            dim += 1;
        } else {
            std::set<std::string> levels(train.columns()[c].category.begin(),
                                         train.columns()[c].category.end());
            fitted[c].levels.assign(levels.begin(), levels.end());
            dim += static_cast<int>(fitted[c].levels.size());
        }
    }
    if (dim == 0) throw SchemaError("encoder produced zero columns");

    return {transform(train, fitted, dim), transform(test, fitted, dim)};
}

GroupSplit partition_by_group(const Dataset& test) {
    if (test.size() == 0) throw InputError("cannot partition an empty test set");
    GroupSplit split;
    for (int i = 0; i < test.size(); ++i) {
        (test.groups()[i] == 0 ? split.group0 : split.group1).push_back(i);
    }
    if (split.group0.empty() || split.group1.empty()) {
        throw GroupCoverageError("one sensitive group is empty in the test set; "
                                 "the disparity test is undefined");
    }
    return split;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double test_fraction,
                                             std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("test_fraction must be in (0, 1)");
    }

    std::vector<int> class0, class1;
    for (int i = 0; i < data.size(); ++i) {
        (data.labels()[i] == 0 ? class0 : class1).push_back(i);
    }
    if (class0.size() < 2 || class1.size() < 2) {
        throw SplitError("each label class needs at least 2 instances");
    }

    // Largest-remainder apportionment of round(n * fraction) test slots.
    const long long total_test = std::llround(data.size() * test_fraction);
    std::vector<std::vector<int>*> classes{&class0, &class1};
    std::vector<long long> take(classes.size());
    std::vector<double> remainder(classes.size());
    long long assigned = 0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const double quota = static_cast<double>(classes[c]->size()) * test_fraction;
        take[c] = static_cast<long long>(std::floor(quota));
        remainder[c] = quota - static_cast<double>(take[c]);
        assigned += take[c];
    }
    std::vector<std::size_t> order(classes.size());
    for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return remainder[a] > remainder[b];
    });
    for (std::size_t k = 0; assigned < total_test; ++k) {
        take[order[k % order.size()]] += 1;
        ++assigned;
    }

    Rng rng(mix64({seed, 0x73706C6974ULL})); // "split" stream
    std::vector<int> test_idx, train_idx;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        auto& members = *classes[c];
        const long long want = take[c];
        if (want <= 0 || want >= static_cast<long long>(members.size())) {
            throw SplitError("class " + std::to_string(c) +
                             " cannot fill both split sides at this fraction");
        }
        rng.shuffle(members);
        for (std::size_t i = 0; i < members.size(); ++i) {
            (static_cast<long long>(i) < want ? test_idx : train_idx).push_back(members[i]);
        }
    }
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    return {data.subset(train_idx), data.subset(test_idx)};
}

void SyntheticSpec::validate() const {
    if (n <= 0) throw ConfigError("synthetic: n must be positive");
    if (d_continuous <= 0) throw ConfigError("synthetic: d_continuous must be positive");
    if (!(group1_fraction > 0.0 && group1_fraction < 1.0)) {
        throw ConfigError("synthetic: group1_fraction must be in (0, 1)");
    }
    if (rule == LabelRule::kGroupDependentNonlinear && d_continuous < 2) {
        throw ConfigError("synthetic: the nonlinear rule needs at least 2 features");
    }
    if (!logit_weights.empty() &&
        logit_weights.size() != static_cast<std::size_t>(d_continuous)) {
        throw ConfigError("synthetic: logit_weights length must equal d_continuous");
    }
    if (noise < 0.0) throw ConfigError("synthetic: noise must be non-negative");
    if (xor_strength < 0.0) throw ConfigError("synthetic: xor_strength must be non-negative");
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();

    std::vector<double> weights = spec.logit_weights;
    if (weights.empty()) {
        weights.resize(static_cast<std::size_t>(spec.d_continuous));
        for (std::size_t j = 0; j < weights.size(); ++j) {
            weights[j] = (j % 2 == 0) ? 2.0 : -1.0;
        }
    }

    DatasetSchema schema;
    schema.target_column = "label";
    schema.positive_label = "1";
    schema.sensitive_column = "group";
    schema.group0_value = "0";
    schema.group1_value = "1";
    for (int j = 0; j < spec.d_continuous; ++j) {
        schema.feature_columns.push_back({"x" + std::to_string(j), FeatureKind::kContinuous});
    }

    std::vector<RawColumn> columns(static_cast<std::size_t>(spec.d_continuous));
    std::vector<int> labels, groups;
    labels.reserve(static_cast<std::size_t>(spec.n));
    groups.reserve(static_cast<std::size_t>(spec.n));

    Rng rng(mix64({seed, 0x73796E7468ULL})); // "synth" stream
    std::vector<double> x(static_cast<std::size_t>(spec.d_continuous));
    for (int i = 0; i < spec.n; ++i) {
        const int group = rng.bernoulli(spec.group1_fraction) ? 1 : 0;
        for (int j = 0; j < spec.d_continuous; ++j) {
            x[static_cast<std::size_t>(j)] = rng.normal();
            columns[static_cast<std::size_t>(j)].numeric.push_back(
                x[static_cast<std::size_t>(j)]);
        }

        double logit;
        if (spec.rule == LabelRule::kGroupDependentNonlinear && group == 1) {
            const double product = x[0] * x[1];
            const double sign = product > 0.0 ? 1.0 : (product < 0.0 ? -1.0 : 0.0);
            logit = spec.xor_strength * sign;
        } else {
            logit = spec.intercept;
            for (int j = 0; j < spec.d_continuous; ++j) {
                logit += weights[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
            }
        }
        if (spec.noise > 0.0) logit += spec.noise * rng.normal();

        labels.push_back(rng.bernoulli(logistic(logit)) ? 1 : 0);
        groups.push_back(group);
    }

    return Dataset(std::move(schema), std::move(columns), std::move(labels),
                   std::move(groups));
}

} // namespace xaudit
