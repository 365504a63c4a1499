#include "xaudit/metrics.hpp"

#include "xaudit/explainers.hpp"
#include "xaudit/rng.hpp"

#include "support/test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace xaudit;
using namespace xaudit::testing;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v(i++) = x;
    return v;
}

} // namespace

TEST_CASE("top_k uses magnitudes with index tie-break") {
    CHECK(top_k_indices(vec({0.9, -0.5, 0.1}), 2) == std::vector<int>{0, 1});
    CHECK(top_k_indices(vec({1, 1, 1}), 2) == std::vector<int>{0, 1});
    CHECK(top_k_indices(vec({-3, 2, 0}), 1) == std::vector<int>{0});
    CHECK_THROWS_AS(top_k_indices(vec({1, 2}), 3), ConfigError);
    CHECK_THROWS_AS(top_k_indices(vec({1, 2}), 0), ConfigError);

    // Signed reading ranks by raw value: -3 is then the smallest.
    CHECK(top_k_indices(vec({-3, 2, 0}), 1, true) == std::vector<int>{1});
}

TEST_CASE("ground truth fidelity overlap") {
    const Eigen::VectorXd w = vec({0.9, 0.5, 0.1, 0.05});
    CHECK(ground_truth_fidelity(w, w, 2) == 1.0);
    CHECK(ground_truth_fidelity(vec({1, 0, 0, 0}), vec({0, 0, 0, 1}), 1) == 0.0);

    // Sort-oracle derived: top2(w) = {0,1}, top2(omega) = {1,2}, overlap 1.
    const Eigen::VectorXd omega = vec({0.1, 0.8, 0.7, 0.0});
    CHECK(ground_truth_fidelity(w, omega, 2) == 0.5);
    CHECK_THROWS_AS(ground_truth_fidelity(w, vec({1, 2}), 2), ShapeError);
}

TEST_CASE("prediction gap degenerate cases are exactly zero") {
    const LinearModel model(vec({5, 0}), 0.0);
    const Eigen::VectorXd x = vec({0.2, -0.4});
    MetricConfig cfg;
    cfg.k = 2; // = d, everything protected
    cfg.m_pred_gap = 50;
    CHECK(prediction_gap(model, x, vec({1, 2}), cfg, 0) == 0.0);

    cfg.k = 1;
    cfg.sigma = 0.0;
    CHECK(prediction_gap(model, x, vec({1, 2}), cfg, 0) == 0.0);

    // Noise only ever hits the zero-coefficient feature.
    cfg.sigma = 0.1;
    const Eigen::VectorXd w = vec({0.9, 0.1}); // top-1 = feature 0
    CHECK(prediction_gap(model, x, w, cfg, 0) == 0.0);
}

TEST_CASE("prediction gap responds to unprotected influential features") {
    const LinearModel model(vec({5, 0}), 0.0);
    MetricConfig cfg;
    cfg.k = 1;
    cfg.m_pred_gap = 400;
    // Importance points at the wrong feature, so noise hits the strong one.
    const double gap = prediction_gap(model, vec({0.2, -0.4}), vec({0.1, 0.9}), cfg, 0);
    CHECK(gap > 0.01);
    CHECK(gap <= 1.0);

    // Deterministic given the seed.
    CHECK(prediction_gap(model, vec({0.2, -0.4}), vec({0.1, 0.9}), cfg, 7) ==
          prediction_gap(model, vec({0.2, -0.4}), vec({0.1, 0.9}), cfg, 7));
}

TEST_CASE("prediction gap estimator converges across seeds") {
    const MlpModel mlp = make_random_mlp(4, {10, 8}, 14);
    const Eigen::VectorXd x = vec({0.3, -0.9, 0.5, 1.1});
    const Eigen::VectorXd w = vec({0.4, 0.1, -0.2, 0.05});
    MetricConfig cfg;
    cfg.k = 1;
    cfg.m_pred_gap = 10000;

    const double run1 = prediction_gap(mlp, x, w, cfg, 100);
    const double run2 = prediction_gap(mlp, x, w, cfg, 200);

    // Gap values live in [0, 1]; per-draw std is bounded by 0.5, so three
    // standard errors of the mean difference is a loose, safe band.
    const double bound = 3.0 * 0.5 * std::sqrt(2.0 / cfg.m_pred_gap);
    CHECK(std::abs(run1 - run2) <= bound);
}

TEST_CASE("prediction gap can exempt one-hot columns from noise") {
    const LinearModel model(vec({0, 5}), 0.0);
    MetricConfig cfg;
    cfg.k = 1;
    cfg.m_pred_gap = 50;
    const Eigen::VectorXd x = vec({0.5, 1.0});
    const Eigen::VectorXd w = vec({0.9, 0.1}); // protects feature 0 only
    const std::vector<ColumnKind> kinds{ColumnKind::kNumeric, ColumnKind::kOneHot};

    const double with_noise = prediction_gap(model, x, w, cfg, 3, kinds);
    CHECK(with_noise > 0.0);
    cfg.noise_on_onehot = false;
    CHECK(prediction_gap(model, x, w, cfg, 3, kinds) == 0.0);
}

TEST_CASE("instability is zero for constant explainers and zero noise") {
    MetricConfig cfg;
    const Eigen::VectorXd x = vec({1, 2});

    const ExplainFn constant_explainer = [](const Eigen::VectorXd&, std::uint64_t) {
        return vec({0.5, -0.5});
    };
    CHECK(instability(x, constant_explainer, cfg, 42) == 0.0);

    // sigma = 0 with a deterministic (seed-ignoring) explainer.
    cfg.sigma = 0.0;
    const ExplainFn deterministic = [](const Eigen::VectorXd& point, std::uint64_t) {
        return Eigen::VectorXd(2.0 * point);
    };
    CHECK(instability(x, deterministic, cfg, 42) == 0.0);
}

TEST_CASE("instability matches a closed-form-gradient monte-carlo oracle") {
    // VanillaGrad on a linear model: E(x) = h(x)(1 - h(x)) w, so instability
    // is E | (s(x) - s(x~)) w |_1 = E|s(x) - s(x~)| * |w|_1.
    const Eigen::VectorXd w = vec({2, -1});
    const LinearModel model(w, 0.0);
    const Eigen::VectorXd x = vec({0, 0});

    MetricConfig cfg;
    cfg.sigma = 0.1;
    cfg.m_stability = 10000;
    const ExplainFn vanilla = [&](const Eigen::VectorXd& point, std::uint64_t) {
        return Eigen::VectorXd(model.input_gradient(point));
    };
    const double got = instability(x, vanilla, cfg, 91);

    const double s_x = 0.25; // h = 0.5 at the origin
    const int draws = 200000;
    Rng rng(mix64({424242, 7}));
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < draws; ++i) {
        Eigen::VectorXd noisy(2);
        noisy(0) = x(0) + cfg.sigma * rng.normal();
        noisy(1) = x(1) + cfg.sigma * rng.normal();
        const double h = model.predict_proba(noisy);
        const double term = std::abs(s_x - h * (1.0 - h)) * w.cwiseAbs().sum();
        sum += term;
        sum_sq += term * term;
    }
    const double oracle_mean = sum / draws;
    const double var = sum_sq / draws - oracle_mean * oracle_mean;
    const double stderr_combined =
        std::sqrt(var) * std::sqrt(1.0 / cfg.m_stability + 1.0 / draws);
    CHECK(std::abs(got - oracle_mean) <= 2.0 * stderr_combined);
}

TEST_CASE("inconsistency is zero for deterministic explainers") {
    const MlpModel mlp = make_random_mlp(3, {8, 5}, 44);
    const Eigen::VectorXd x = vec({0.7, -0.1, 0.2});
    ExplainerConfig cfg;

    for (Method method : {Method::kVanillaGrad, Method::kIntGrad}) {
        const ExplainFn fn = [&, method](const Eigen::VectorXd& point, std::uint64_t seed) {
            return explain(method, mlp, point, cfg, seed).importances;
        };
        CHECK(inconsistency(x, fn, {1, 2, 3, 4}) == 0.0);
    }

    // m = 1 with an identical replicate seed.
    const ExplainFn lime_fn = [&](const Eigen::VectorXd& point, std::uint64_t seed) {
        LimeConfig lime;
        lime.samples = 60;
        return explain_lime(mlp, point, lime, seed).importances;
    };
    CHECK(inconsistency(x, lime_fn, {9, 9}) == 0.0);
    CHECK(inconsistency(x, lime_fn, {9, 10}) > 0.0);
    CHECK_THROWS_AS(inconsistency(x, lime_fn, {9}), ConfigError);
}

TEST_CASE("complexity counts magnitudes over the threshold") {
    MetricConfig cfg;
    CHECK(complexity(Eigen::VectorXd::Zero(4), cfg) == 0);
    CHECK(complexity(vec({0.02, -0.5, 0.005}), cfg) == 2);

    cfg.t = 0.0;
    CHECK(complexity(vec({0.1, -0.2, 0.3}), cfg) == 3);

    // Signed reading: negative entries never exceed a positive threshold.
    cfg.t = 0.01;
    cfg.signed_importances = true;
    CHECK(complexity(vec({0.02, -0.5, 0.005}), cfg) == 1);
}

TEST_CASE("complexity is non-increasing in the threshold") {
    Rng rng(33);
    MetricConfig cfg;
    for (int rep = 0; rep < 100; ++rep) {
        Eigen::VectorXd w(12);
        for (int j = 0; j < 12; ++j) w(j) = rng.normal() * std::pow(10.0, rng.normal());
        int previous = 13;
        for (int step = 0; step < 50; ++step) {
            cfg.t = 0.002 * step;
            const int count = complexity(w, cfg);
            CHECK(count <= previous);
            previous = count;
        }
    }
}

TEST_CASE("metric values are invariant under consistent feature permutation") {
    const Eigen::VectorXd coef = vec({1.4, -0.6, 0.3, 2.2});
    const Eigen::VectorXd x = vec({0.5, -1.0, 0.25, 0.75});
    const LinearModel model(coef, 0.2);

    const std::vector<int> perm{2, 0, 3, 1};
    Eigen::VectorXd coef_p(4), x_p(4);
    for (int j = 0; j < 4; ++j) {
        coef_p(j) = coef(perm[j]);
        x_p(j) = x(perm[j]);
    }
    const LinearModel model_p(coef_p, 0.2);

    MetricConfig cfg;
    cfg.k = 2;
    cfg.m_pred_gap = 3000;

    const Eigen::VectorXd w = model.input_gradient(x);
    Eigen::VectorXd w_p(4);
    for (int j = 0; j < 4; ++j) w_p(j) = w(perm[j]);

    CHECK(ground_truth_fidelity(w, coef.cwiseAbs(), cfg.k) ==
          ground_truth_fidelity(w_p, coef_p.cwiseAbs(), cfg.k));
    CHECK(complexity(w, cfg) == complexity(w_p, cfg));

    // Monte-Carlo estimates: equal in distribution, so compare loosely.
    const double gap = prediction_gap(model, x, w, cfg, 5);
    const double gap_p = prediction_gap(model_p, x_p, w_p, cfg, 6);
    CHECK(std::abs(gap - gap_p) <= 3.0 * 0.5 * std::sqrt(2.0 / cfg.m_pred_gap));
}

TEST_CASE("metric config validation") {
    MetricConfig cfg;
    cfg.k = 0;
    CHECK_THROWS_AS(cfg.validate(4), ConfigError);
    cfg = {};
    cfg.k = 9;
    CHECK_THROWS_AS(cfg.validate(4), ConfigError);
    cfg = {};
    cfg.sigma = -1.0;
    CHECK_THROWS_AS(cfg.validate(4), ConfigError);
    cfg = {};
    cfg.m_pred_gap = 0;
    CHECK_THROWS_AS(cfg.validate(4), ConfigError);
    cfg = {};
    CHECK_NOTHROW(cfg.validate(5));
}
