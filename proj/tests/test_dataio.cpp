#include "xaudit/dataio.hpp"

#include "xaudit/models.hpp"

#include "support/test_support.hpp"

#include <doctest.h>

#include <set>

using namespace xaudit;
using namespace xaudit::testing;

namespace {

DatasetSchema credit_schema() {
    DatasetSchema schema;
    schema.target_column = "credit";
    schema.positive_label = "good";
    schema.sensitive_column = "sex";
    schema.group0_value = "male";
    schema.group1_value = "female";
    schema.feature_columns = {{"age", FeatureKind::kContinuous},
                              {"housing", FeatureKind::kCategorical}};
    return schema;
}

const char* kFourRows =
    "age,housing,sex,credit\n"
    "30,own,male,good\n"
    "44,rent,female,bad\n"
    "25,own,female,good\n"
    "61,free,male,bad\n";

} // namespace

TEST_CASE("loader maps labels and groups in file order") {
    TempDir dir("load");
    write_text(dir.path() / "data.csv", kFourRows);
    const Dataset data = load_dataset(dir.path() / "data.csv", credit_schema());
    REQUIRE(data.size() == 4);
    CHECK(data.labels() == std::vector<int>{1, 0, 1, 0});
    CHECK(data.groups() == std::vector<int>{0, 1, 1, 0});
    CHECK(data.columns()[0].numeric[3] == 61.0);
    CHECK(data.columns()[1].category[1] == "rent");
}

TEST_CASE("loader drops rows with missing values") {
    TempDir dir("load_na");
    write_text(dir.path() / "data.csv",
               "age,housing,sex,credit\n30,own,male,good\n,rent,female,bad\n"
               "25,NA,female,good\n61,free,male,bad\n");
    const Dataset data = load_dataset(dir.path() / "data.csv", credit_schema());
    CHECK(data.size() == 2);
}

TEST_CASE("loader drops and counts rows with a third sensitive value") {
    TempDir dir("load_third");
    write_text(dir.path() / "data.csv",
               "age,housing,sex,credit\n30,own,male,good\n44,rent,other,bad\n"
               "25,own,other,good\n61,free,female,bad\n");
    const Dataset data = load_dataset(dir.path() / "data.csv", credit_schema());
    CHECK(data.size() == 2);
    CHECK(data.skipped_sensitive_rows() == 2);
}

TEST_CASE("loader error paths") {
    TempDir dir("load_err");
    write_text(dir.path() / "no_col.csv", "age,housing,credit\n30,own,good\n");
    CHECK_THROWS_AS(load_dataset(dir.path() / "no_col.csv", credit_schema()), SchemaError);

    write_text(dir.path() / "empty.csv",
               "age,housing,sex,credit\n,own,male,good\n,rent,female,bad\n");
    CHECK_THROWS_AS(load_dataset(dir.path() / "empty.csv", credit_schema()),
                    EmptyDatasetError);

    CHECK_THROWS_AS(load_dataset(dir.path() / "nope.csv", credit_schema()), IoError);

    write_text(dir.path() / "bad_num.csv", "age,housing,sex,credit\nabc,own,male,good\n");
    CHECK_THROWS_AS(load_dataset(dir.path() / "bad_num.csv", credit_schema()), InputError);
}

TEST_CASE("schema validation") {
    DatasetSchema schema = credit_schema();
    schema.group1_value = schema.group0_value;
    CHECK_THROWS_AS(schema.validate(), SchemaError);

    schema = credit_schema();
    schema.feature_columns.push_back({"sex", FeatureKind::kCategorical});
    CHECK_THROWS_AS(schema.validate(), SchemaError);
    schema.include_sensitive_as_feature = true;
    CHECK_NOTHROW(schema.validate());

    schema = credit_schema();
    schema.feature_columns.push_back({"credit", FeatureKind::kCategorical});
    CHECK_THROWS_AS(schema.validate(), SchemaError);
}

TEST_CASE("sensitive attribute can be toggled in as a feature") {
    TempDir dir("load_sens");
    write_text(dir.path() / "data.csv", kFourRows);
    DatasetSchema schema = credit_schema();
    schema.include_sensitive_as_feature = true;
    const Dataset data = load_dataset(dir.path() / "data.csv", schema);
    REQUIRE(data.schema().feature_columns.size() == 3);
    CHECK(data.schema().feature_columns.back().name == "sex");
    CHECK(data.columns()[2].category[0] == "male");
}

namespace {

Dataset make_tiny(const std::vector<double>& xs, const std::vector<std::string>& cats,
                  const std::vector<int>& labels, const std::vector<int>& groups) {
    DatasetSchema schema;
    schema.target_column = "y";
    schema.positive_label = "1";
    schema.sensitive_column = "s";
    schema.group0_value = "0";
    schema.group1_value = "1";
    schema.feature_columns = {{"x", FeatureKind::kContinuous},
                              {"c", FeatureKind::kCategorical}};
    std::vector<RawColumn> columns(2);
    columns[0].numeric = xs;
    columns[1].category = cats;
    return Dataset(schema, columns, labels, groups);
}

} // namespace

TEST_CASE("encoder one-hot layout and standardization") {
    const Dataset train = make_tiny({1, 2, 3}, {"A", "B", "C"}, {0, 1, 0}, {0, 1, 0});
    const Dataset test = make_tiny({2, 2}, {"B", "D"}, {1, 0}, {1, 0});
    const auto [fm_train, fm_test] = encode_features(train, test);

    REQUIRE(fm_train.dim() == 4); // x + 3 levels
    CHECK(fm_train.feature_names ==
          std::vector<std::string>{"x", "c=A", "c=B", "c=C"});
    CHECK(fm_train.column_kinds[0] == ColumnKind::kNumeric);
    CHECK(fm_train.column_kinds[1] == ColumnKind::kOneHot);

    // [1,2,3] standardizes to +/- sqrt(3/2) with the population std.
    CHECK(fm_train.X(0, 0) == doctest::Approx(-1.2247).epsilon(1e-4));
    CHECK(fm_train.X(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fm_train.X(2, 0) == doctest::Approx(1.2247).epsilon(1e-4));

    // Level B one-hot block.
    CHECK(fm_test.X(0, 1) == 0.0);
    CHECK(fm_test.X(0, 2) == 1.0);
    CHECK(fm_test.X(0, 3) == 0.0);
    // Unseen level D encodes to the all-zeros block.
    CHECK(fm_test.X(1, 1) == 0.0);
    CHECK(fm_test.X(1, 2) == 0.0);
    CHECK(fm_test.X(1, 3) == 0.0);
}

TEST_CASE("encoder handles zero-variance continuous columns") {
    const Dataset train = make_tiny({5, 5, 5}, {"A", "A", "B"}, {0, 1, 0}, {0, 1, 0});
    const Dataset test = make_tiny({7}, {"A"}, {1}, {1});
    const auto [fm_train, fm_test] = encode_features(train, test);
    CHECK(fm_train.X(0, 0) == 0.0);       // (5 - 5) / 1
    CHECK(fm_test.X(0, 0) == 2.0);        // (7 - 5) / 1
    CHECK(fm_train.standardization[0].stddev == 1.0);
}

TEST_CASE("encoder is idempotent and one-hot blocks are exclusive") {
    Rng rng(1234);
    std::vector<double> xs;
    std::vector<std::string> cats;
    std::vector<int> labels, groups;
    const std::vector<std::string> pool{"a", "b", "c", "d"};
    for (int i = 0; i < 60; ++i) {
        xs.push_back(rng.normal(3.0, 2.0));
        cats.push_back(pool[rng.uniform_int(pool.size())]);
        labels.push_back(static_cast<int>(rng.uniform_int(2)));
        groups.push_back(static_cast<int>(rng.uniform_int(2)));
    }
    const Dataset data = make_tiny(xs, cats, labels, groups);
    const auto [fm1_train, fm1_test] = encode_features(data, data);
    const auto [fm2_train, fm2_test] = encode_features(data, data);
    CHECK(fm1_test.X == fm2_test.X);

    // Training continuous column standardizes to mean 0, std 1.
    const auto col = fm1_train.X.col(0);
    CHECK(std::abs(col.mean()) < 1e-9);
    CHECK(std::abs(std::sqrt(col.squaredNorm() / col.size()) - 1.0) < 1e-9);

    // Every in-vocabulary row has exactly one 1 in its one-hot block.
    for (int i = 0; i < fm1_train.rows(); ++i) {
        CHECK(fm1_train.X.row(i).segment(1, 4).sum() == 1.0);
    }
}

namespace {

Dataset labeled_dataset(int n_neg, int n_pos) {
    std::vector<double> xs;
    std::vector<std::string> cats;
    std::vector<int> labels, groups;
    for (int i = 0; i < n_neg + n_pos; ++i) {
        xs.push_back(static_cast<double>(i));
        cats.push_back("A");
        labels.push_back(i < n_neg ? 0 : 1);
        groups.push_back(i % 2);
    }
    return make_tiny(xs, cats, labels, groups);
}

} // namespace

TEST_CASE("stratified split hits exact per-class counts") {
    const Dataset data = labeled_dataset(70, 30);
    const auto [train, test] = stratified_split(data, 0.2, 42);
    CHECK(test.size() == 20);
    CHECK(train.size() == 80);
    int positives = 0;
    for (int y : test.labels()) positives += y;
    CHECK(positives == 6);

    const auto [train2, test2] = stratified_split(data, 0.2, 42);
    CHECK(test2.labels() == test.labels());
    CHECK(test2.columns()[0].numeric == test.columns()[0].numeric);

    const auto [train3, test3] = stratified_split(data, 0.2, 43);
    CHECK(test3.columns()[0].numeric != test.columns()[0].numeric);
}

TEST_CASE("stratified split of a 5/5 dataset at 0.2") {
    const Dataset data = labeled_dataset(5, 5);
    const auto [train, test] = stratified_split(data, 0.2, 0);
    REQUIRE(test.size() == 2);
    int positives = 0;
    for (int y : test.labels()) positives += y;
    CHECK(positives == 1);
}

TEST_CASE("stratified split error cases") {
    const Dataset data = labeled_dataset(5, 5);
    CHECK_THROWS_AS(stratified_split(data, 0.0, 0), ConfigError);
    CHECK_THROWS_AS(stratified_split(data, 1.0, 0), ConfigError);
    // 2/2: one class would end up with an empty test side at 0.2.
    CHECK_THROWS_AS(stratified_split(labeled_dataset(2, 2), 0.2, 0), SplitError);
    // Single-instance class violates the precondition outright.
    std::vector<double> xs{0, 1, 2};
    CHECK_THROWS_AS(stratified_split(make_tiny(xs, {"A", "A", "A"}, {0, 0, 1}, {0, 1, 0}),
                                     0.3, 0),
                    SplitError);
}

TEST_CASE("stratified split property sweep: disjoint, complete, exact counts") {
    Rng rng(20240817);
    for (int rep = 0; rep < 30; ++rep) {
        const int n_neg = 10 + static_cast<int>(rng.uniform_int(90));
        const int n_pos = 10 + static_cast<int>(rng.uniform_int(90));
        const double fraction = 0.1 + 0.8 * rng.uniform01();
        const std::uint64_t seed = rng.next_u64();
        const Dataset data = labeled_dataset(n_neg, n_pos);

        const auto counts = largest_remainder_counts({n_neg, n_pos}, fraction);
        if (counts[0] <= 0 || counts[0] >= n_neg || counts[1] <= 0 || counts[1] >= n_pos) {
            CHECK_THROWS_AS(stratified_split(data, fraction, seed), SplitError);
            continue;
        }
        const auto [train, test] = stratified_split(data, fraction, seed);

        // Exact stratified counts against the independent apportionment oracle.
        long long test_neg = 0, test_pos = 0;
        for (int y : test.labels()) (y == 0 ? test_neg : test_pos) += 1;
        CHECK(test_neg == counts[0]);
        CHECK(test_pos == counts[1]);

        // Disjoint and complete: feature values are unique row ids here.
        std::set<double> seen;
        for (double v : train.columns()[0].numeric) seen.insert(v);
        for (double v : test.columns()[0].numeric) {
            CHECK(seen.insert(v).second); // no overlap
        }
        CHECK(static_cast<int>(seen.size()) == data.size());
    }
}

TEST_CASE("partition_by_group routes indices") {
    const Dataset data =
        make_tiny({0, 1, 2, 3, 4}, {"A", "A", "A", "A", "A"},
                  {0, 1, 0, 1, 0}, {0, 1, 0, 0, 1});
    const GroupSplit split = partition_by_group(data);
    CHECK(split.group0 == std::vector<int>{0, 2, 3});
    CHECK(split.group1 == std::vector<int>{1, 4});

    const Dataset two = make_tiny({0, 1}, {"A", "A"}, {0, 1}, {1, 0});
    const GroupSplit swapped = partition_by_group(two);
    CHECK(swapped.group0 == std::vector<int>{1});
    CHECK(swapped.group1 == std::vector<int>{0});

    const Dataset lonely = make_tiny({0, 1}, {"A", "A"}, {0, 1}, {0, 0});
    CHECK_THROWS_AS(partition_by_group(lonely), GroupCoverageError);
}

TEST_CASE("synthetic generator determinism and spec validation") {
    SyntheticSpec spec;
    spec.n = 500;
    spec.d_continuous = 3;
    const Dataset a = generate_synthetic(spec, 9);
    const Dataset b = generate_synthetic(spec, 9);
    CHECK(a.labels() == b.labels());
    CHECK(a.groups() == b.groups());
    for (int c = 0; c < 3; ++c) {
        CHECK(a.columns()[c].numeric == b.columns()[c].numeric);
    }
    const Dataset c = generate_synthetic(spec, 10);
    CHECK(a.labels() != c.labels());

    SyntheticSpec bad = spec;
    bad.n = 0;
    CHECK_THROWS_AS(generate_synthetic(bad, 0), ConfigError);
    bad = spec;
    bad.d_continuous = 0;
    CHECK_THROWS_AS(generate_synthetic(bad, 0), ConfigError);
    bad = spec;
    bad.d_continuous = 1;
    bad.rule = LabelRule::kGroupDependentNonlinear;
    CHECK_THROWS_AS(generate_synthetic(bad, 0), ConfigError);
}

TEST_CASE("shared_linear generator has balanced group label rates") {
    SyntheticSpec spec;
    spec.n = 2000;
    spec.d_continuous = 4;
    spec.group1_fraction = 0.5;
    const Dataset data = generate_synthetic(spec, 2024);
    double rate[2] = {0, 0};
    int count[2] = {0, 0};
    for (int i = 0; i < data.size(); ++i) {
        rate[data.groups()[i]] += data.labels()[i];
        ++count[data.groups()[i]];
    }
    rate[0] /= count[0];
    rate[1] /= count[1];
    CHECK(std::abs(rate[0] - rate[1]) < 0.05);
}

TEST_CASE("nonlinear rule planted for group 1 defeats a linear model") {
    SyntheticSpec spec;
    spec.n = 3000;
    spec.d_continuous = 4;
    spec.rule = LabelRule::kGroupDependentNonlinear;
    const Dataset data = generate_synthetic(spec, 7);
    const auto [train, test] = stratified_split(data, 0.2, 1);
    const auto [fm_train, fm_test] = encode_features(train, test);

    TrainConfig cfg;
    cfg.epochs = 40;
    const LinearModel lr = train_logistic(fm_train, train.labels(), cfg);

    const GroupSplit split = partition_by_group(test);
    auto group_accuracy = [&](const std::vector<int>& members) {
        int correct = 0;
        for (int i : members) {
            const int predicted = lr.predict_proba(fm_test.X.row(i)) >= 0.5 ? 1 : 0;
            if (predicted == test.labels()[i]) ++correct;
        }
        return static_cast<double>(correct) / static_cast<double>(members.size());
    };
    const double acc0 = group_accuracy(split.group0);
    const double acc1 = group_accuracy(split.group1);
    CHECK(acc0 - acc1 >= 0.05);
}

TEST_CASE("subset keeps row alignment") {
    const Dataset data = make_tiny({10, 11, 12, 13}, {"A", "B", "A", "B"},
                                   {0, 1, 1, 0}, {0, 0, 1, 1});
    const Dataset sub = data.subset({2, 0});
    REQUIRE(sub.size() == 2);
    CHECK(sub.columns()[0].numeric == std::vector<double>{12, 10});
    CHECK(sub.columns()[1].category == std::vector<std::string>{"A", "A"});
    CHECK(sub.labels() == std::vector<int>{1, 0});
    CHECK(sub.groups() == std::vector<int>{1, 0});
    CHECK_THROWS_AS(data.subset({4}), InputError);
}
