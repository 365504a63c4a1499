#include "xaudit/metrics.hpp"

#include "xaudit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace xaudit {

void MetricConfig::validate(int d) const {
    if (k < 1) throw ConfigError("metric k must be at least 1");
    if (d > 0 && k > d) {
        throw ConfigError("metric k = " + std::to_string(k) + " exceeds d = " +
                          std::to_string(d));
    }
    if (m_pred_gap < 1 || m_stability < 1 || m_consistency < 1) {
        throw ConfigError("metric sample counts must be at least 1");
    }
    if (sigma < 0.0) throw ConfigError("metric sigma must be non-negative");
    if (t < 0.0) throw ConfigError("sparsity threshold must be non-negative");
}

std::vector<int> top_k_indices(const Eigen::VectorXd& v, int k, bool signed_importances) {
    const int d = static_cast<int>(v.size());
    if (k < 1 || k > d) {
        throw ConfigError("top-k size " + std::to_string(k) + " outside [1, " +
                          std::to_string(d) + "]");
    }
    std::vector<int> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    auto key = [&](int i) { return signed_importances ? v(i) : std::abs(v(i)); };
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return key(a) > key(b); });
    order.resize(static_cast<std::size_t>(k));
    std::sort(order.begin(), order.end());
    return order;
}

double ground_truth_fidelity(const Eigen::VectorXd& w, const Eigen::VectorXd& omega,
                             int k, bool signed_importances) {
    if (w.size() != omega.size()) {
        throw ShapeError("explanation and ground-truth weight lengths differ");
    }
    const auto top_w = top_k_indices(w, k, signed_importances);
    const auto top_omega = top_k_indices(omega, k, signed_importances);
    std::vector<int> overlap;
    std::set_intersection(top_w.begin(), top_w.end(), top_omega.begin(), top_omega.end(),
                          std::back_inserter(overlap));
    return static_cast<double>(overlap.size()) / static_cast<double>(k);
}

double prediction_gap(const Model& model, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& w, const MetricConfig& cfg,
                      std::uint64_t seed, std::span<const ColumnKind> column_kinds) {
    const int d = static_cast<int>(x.size());
    cfg.validate(d);
    if (w.size() != x.size()) throw ShapeError("explanation length does not match instance");
    if (!column_kinds.empty() && static_cast<int>(column_kinds.size()) != d) {
        throw ShapeError("column kinds length does not match instance");
    }

    // Protected coordinates keep their values; everything else gets noise.
    std::vector<bool> perturb(static_cast<std::size_t>(d), true);
    for (int idx : top_k_indices(w, cfg.k, cfg.signed_importances)) {
        perturb[static_cast<std::size_t>(idx)] = false;
    }
    if (!cfg.noise_on_onehot && !column_kinds.empty()) {
        for (int j = 0; j < d; ++j) {
            if (column_kinds[static_cast<std::size_t>(j)] == ColumnKind::kOneHot) {
                perturb[static_cast<std::size_t>(j)] = false;
            }
        }
    }
    const bool any_perturbed =
        std::any_of(perturb.begin(), perturb.end(), [](bool b) { return b; });
    if (cfg.sigma == 0.0 || !any_perturbed) return 0.0;

    const double h_x = model.predict_proba(x);
    Rng rng(mix64({seed, 0x70676170ULL})); // "pgap" stream
    Eigen::VectorXd noisy(d);
    double total = 0.0;
    for (int s = 0; s < cfg.m_pred_gap; ++s) {
        for (int j = 0; j < d; ++j) {
            noisy(j) = perturb[static_cast<std::size_t>(j)]
                           ? x(j) + cfg.sigma * rng.normal()
                           : x(j);
        }
        total += std::abs(h_x - model.predict_proba(noisy));
    }
    return total / static_cast<double>(cfg.m_pred_gap);
}

double instability(const Eigen::VectorXd& x, const ExplainFn& explain,
                   const MetricConfig& cfg, std::uint64_t canonical_seed,
                   const Eigen::VectorXd* reference) {
    cfg.validate(0);
    Eigen::VectorXd ref = reference != nullptr ? *reference : explain(x, canonical_seed);

    Rng noise_rng(mix64({canonical_seed, 0x6E6F6973ULL})); // "nois" stream
    const int d = static_cast<int>(x.size());
    Eigen::VectorXd perturbed(d);
    double total = 0.0;
    for (int j = 1; j <= cfg.m_stability; ++j) {
        for (int i = 0; i < d; ++i) perturbed(i) = x(i) + cfg.sigma * noise_rng.normal();
        const Eigen::VectorXd other =
            explain(perturbed, canonical_seed + static_cast<std::uint64_t>(j));
        total += (ref - other).lpNorm<1>();
    }
    return total / static_cast<double>(cfg.m_stability);
}

double inconsistency(const Eigen::VectorXd& x, const ExplainFn& explain,
                     const std::vector<std::uint64_t>& seeds,
                     const Eigen::VectorXd* reference) {
    if (seeds.size() < 2) {
        throw ConfigError("inconsistency needs a reference seed plus at least one replicate");
    }
    Eigen::VectorXd ref = reference != nullptr ? *reference : explain(x, seeds[0]);
    double total = 0.0;
    for (std::size_t j = 1; j < seeds.size(); ++j) {
        total += (ref - explain(x, seeds[j])).lpNorm<1>();
    }
    return total / static_cast<double>(seeds.size() - 1);
}

int complexity(const Eigen::VectorXd& w, const MetricConfig& cfg) {
    if (cfg.t < 0.0) throw ConfigError("sparsity threshold must be non-negative");
    int count = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double value = cfg.signed_importances ? w(i) : std::abs(w(i));
        if (value > cfg.t) ++count;
    }
    return count;
}

} // namespace xaudit
