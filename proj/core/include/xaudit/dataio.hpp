#pragma once

#include "xaudit/errors.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace xaudit {

enum class FeatureKind { kContinuous, kCategorical };

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::kContinuous;
};

// What the loader needs to turn a labeled CSV into a binary classification
// problem with a binary sensitive attribute. group0 is the majority group by
// convention; the loader does not enforce that.
struct DatasetSchema {
    std::string target_column;
    std::string positive_label;
    std::string sensitive_column;
    std::string group0_value;
    std::string group1_value;
    std::vector<FeatureSpec> feature_columns;
    // Off by default so that explanation disparity is not confounded with the
    // model seeing the attribute directly; flip to replicate setups that feed
    // the sensitive column to the model as a categorical feature.
    bool include_sensitive_as_feature = false;

    void validate() const;
};

// Raw values for one feature column; the payload matching the declared kind
// is populated, the other stays empty.
struct RawColumn {
    std::vector<double> numeric;
    std::vector<std::string> category;
};

class Dataset {
public:
    Dataset() = default;
    Dataset(DatasetSchema schema, std::vector<RawColumn> columns,
            std::vector<int> labels, std::vector<int> groups,
            int skipped_sensitive_rows = 0);

    int size() const { return static_cast<int>(labels_.size()); }
    const DatasetSchema& schema() const { return schema_; }
    const std::vector<RawColumn>& columns() const { return columns_; }
    const std::vector<int>& labels() const { return labels_; }
    const std::vector<int>& groups() const { return groups_; }

    // Rows whose sensitive value was neither group0 nor group1 and were
    // therefore dropped at load time.
    int skipped_sensitive_rows() const { return skipped_sensitive_rows_; }

    // New dataset holding the given rows, in the given order.
    Dataset subset(const std::vector<int>& indices) const;

private:
    DatasetSchema schema_;
    std::vector<RawColumn> columns_;
    std::vector<int> labels_;
    std::vector<int> groups_;
    int skipped_sensitive_rows_ = 0;
};

// Reads a CSV with a header row. Rows with missing values ("" / "NA" / "?")
// in any used column are dropped; rows whose sensitive value is neither
// configured group are dropped and counted (Dataset::skipped_sensitive_rows).
Dataset load_dataset(const std::filesystem::path& path, const DatasetSchema& schema);

enum class ColumnKind { kNumeric, kOneHot };

struct ColumnStats {
    double mean = 0.0;
    double stddev = 1.0;
};

// Dense numeric view of a Dataset: categoricals one-hot expanded, continuous
// columns standardized with statistics fitted on the training rows only.
struct FeatureMatrix {
    Eigen::MatrixXd X; // n x d, row per instance
    std::vector<std::string> feature_names;
    std::vector<ColumnKind> column_kinds;
    std::vector<ColumnStats> standardization; // identity stats for one-hot columns

    int rows() const { return static_cast<int>(X.rows()); }
    int dim() const { return static_cast<int>(X.cols()); }
};

// Fits the encoder on train (one-hot vocabularies = sorted distinct train
// levels; per-column mean and population std) and transforms both sets.
// Unseen test levels encode to the all-zeros block; zero-variance continuous
// columns are centered with the std treated as 1.
std::pair<FeatureMatrix, FeatureMatrix> encode_features(const Dataset& train,
                                                        const Dataset& test);

struct GroupSplit {
    std::vector<int> group0; // test-set indices with s = 0
    std::vector<int> group1; // test-set indices with s = 1
};

GroupSplit partition_by_group(const Dataset& test);

// Label-stratified split. Per-class test counts follow largest-remainder
// rounding of class_count * test_fraction against a total of
// round(n * test_fraction), so the totals are exact and testable.
std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double test_fraction,
                                             std::uint64_t seed);

enum class LabelRule { kSharedLinear, kGroupDependentNonlinear };

// Synthetic binary-classification generator used for deterministic fixtures.
//
//   shared_linear             p(y=1|x) = logistic(w.x + b + noise*eps)
//                             for both groups (null case, no planted effect).
//   group_dependent_nonlinear group 0 as above; group 1 labels follow an
//                             XOR-style interaction of the first two features,
//                             p = logistic(xor_strength * sign(x0 * x1)),
//                             which a linear model cannot represent.
struct SyntheticSpec {
    int n = 0;
    int d_continuous = 0;
    double group1_fraction = 0.5;
    LabelRule rule = LabelRule::kSharedLinear;
    double noise = 0.0;
    std::vector<double> logit_weights; // empty: alternating +2, -1, +2, ...
    double intercept = 0.0;
    double xor_strength = 4.0;

    void validate() const;
};

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

} // namespace xaudit
