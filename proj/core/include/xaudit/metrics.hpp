#pragma once

#include "xaudit/dataio.hpp"
#include "xaudit/models.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace xaudit {

// Hyperparameters for the five quality estimators.
struct MetricConfig {
    int k = 5;             // top-k size (capped at d when d < k by callers)
    int m_pred_gap = 1000; // prediction-gap noise draws
    double sigma = 0.1;    // noise std for prediction gap and instability
    int m_stability = 5;   // instability perturbations
    int m_consistency = 5; // inconsistency re-explanations
    double t = 0.01;       // sparsity threshold

    // The definitions read literally on signed importances; by default the
    // top-k and the sparsity threshold compare |w_i| instead, since
    // gradient-derived importances are sign-mixed. Set to true for the
    // literal signed reading.
    bool signed_importances = false;
    // Whether prediction-gap noise also hits one-hot columns.
    bool noise_on_onehot = true;

    void validate(int d) const;
};

// Per-instance metric value, one row of the evaluation table.
struct MetricSample {
    int instance_index = -1;
    std::string metric;
    double value = 0.0;
};

inline constexpr const char* kMetricGroundTruthFidelity = "ground_truth_fidelity";
inline constexpr const char* kMetricPredictionGap = "prediction_gap";
inline constexpr const char* kMetricInstability = "instability";
inline constexpr const char* kMetricInconsistency = "inconsistency";
inline constexpr const char* kMetricComplexity = "complexity";

// The k indices with the largest magnitude (or signed value, if requested);
// ties break toward the smaller index. Returned sorted ascending.
std::vector<int> top_k_indices(const Eigen::VectorXd& v, int k,
                               bool signed_importances = false);

// |top_k(w) ∩ top_k(omega)| / k
double ground_truth_fidelity(const Eigen::VectorXd& w, const Eigen::VectorXd& omega,
                             int k, bool signed_importances = false);

// mean_j |h(x) - h(x_j~)| where x_j~ adds N(0, sigma^2) noise to every
// coordinate outside top_k(w). Lower is better. column_kinds, when provided
// with noise_on_onehot = false, exempts one-hot columns from noise.
double prediction_gap(const Model& model, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& w, const MetricConfig& cfg,
                      std::uint64_t seed,
                      std::span<const ColumnKind> column_kinds = {});

// An explanation routine bound to a model: x and a seed in, importances out.
using ExplainFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, std::uint64_t)>;

// mean_j | E(x) - E(x + z_j) |_1 with z_j ~ N(0, sigma^2 I) on all
// coordinates. The reference explanation uses canonical_seed; perturbed
// replicas use the successor seeds canonical_seed + j. Pass the already
// computed reference explanation to skip recomputing it (it must equal
// explain(x, canonical_seed)).
double instability(const Eigen::VectorXd& x, const ExplainFn& explain,
                   const MetricConfig& cfg, std::uint64_t canonical_seed,
                   const Eigen::VectorXd* reference = nullptr);

// mean_j | E_seed0(x) - E_seedj(x) |_1 over seeds[1..]; seeds[0] is the
// reference seed.
double inconsistency(const Eigen::VectorXd& x, const ExplainFn& explain,
                     const std::vector<std::uint64_t>& seeds,
                     const Eigen::VectorXd* reference = nullptr);

// Number of coordinates with |w_i| > t (or w_i > t under the signed reading).
int complexity(const Eigen::VectorXd& w, const MetricConfig& cfg);

} // namespace xaudit
