#pragma once

#include "xaudit/dataio.hpp"
#include "xaudit/errors.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace xaudit {

// Shared optimizer settings: adaptive-moment estimation with the usual decay
// rates, minimizing mean binary cross entropy.
struct TrainConfig {
    int epochs = 100;
    int batch_size = 32;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double l2_penalty = 1e-4;   // logistic regression slopes only
    std::uint64_t seed = 0;     // weight init + batch shuffling

    void validate() const;
};

// Probabilistic binary classifier. predict_proba returns h(x) in (0,1);
// the classification is g(h) = 1 iff h >= 0.5. input_gradient is the exact
// analytic gradient of h at x.
class Model {
public:
    virtual ~Model() = default;
    virtual int dim() const = 0;
    virtual double predict_proba(const Eigen::VectorXd& x) const = 0;
    virtual Eigen::VectorXd input_gradient(const Eigen::VectorXd& x) const = 0;
    virtual const char* kind() const = 0; // "lr" or "nn"
};

class LinearModel final : public Model {
public:
    LinearModel(Eigen::VectorXd coefficients, double intercept);

    const Eigen::VectorXd& coefficients() const { return coefficients_; }
    double intercept() const { return intercept_; }

    int dim() const override { return static_cast<int>(coefficients_.size()); }
    double predict_proba(const Eigen::VectorXd& x) const override;
    // h(x) * (1 - h(x)) * coefficients, exactly.
    Eigen::VectorXd input_gradient(const Eigen::VectorXd& x) const override;
    const char* kind() const override { return "lr"; }

private:
    Eigen::VectorXd coefficients_;
    double intercept_;
};

// Fully-connected rectifier network with a logistic output unit. The
// rectifier derivative at exactly 0 is taken as 0.
class MlpModel final : public Model {
public:
    struct Layer {
        Eigen::MatrixXd weights; // out x in
        Eigen::VectorXd biases;  // out
    };

    explicit MlpModel(std::vector<Layer> layers);

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }
    std::vector<int> hidden_widths() const;

    int dim() const override { return static_cast<int>(layers_.front().weights.cols()); }
    double predict_proba(const Eigen::VectorXd& x) const override;
    Eigen::VectorXd input_gradient(const Eigen::VectorXd& x) const override;
    const char* kind() const override { return "nn"; }

private:
    std::vector<Layer> layers_;
};

// Default hidden widths, input to output.
inline const std::vector<int> kDefaultHiddenWidths{50, 100, 200};

// Minimizes mean binary cross entropy plus 0.5 * l2_penalty * |w|^2 on the
// slopes (intercept unpenalized). Runs mini-batch epochs until the full-data
// gradient norm drops below 1e-8 or the epoch budget is spent. Weights start
// at zero, so the seed only drives batch shuffling.
LinearModel train_logistic(const FeatureMatrix& train, const std::vector<int>& labels,
                           const TrainConfig& cfg);

// Exactly cfg.epochs mini-batch epochs; layer weights start uniform in
// +/- sqrt(6 / (fan_in + fan_out)), biases at zero.
MlpModel train_mlp(const FeatureMatrix& train, const std::vector<int>& labels,
                   const TrainConfig& cfg,
                   const std::vector<int>& hidden_widths = kDefaultHiddenWidths);

// |coefficient_j| on the standardized feature scale. Defined for linear
// models only; anything else raises UnsupportedModelError.
Eigen::VectorXd ground_truth_weights(const Model& model);

double accuracy(const Model& model, const FeatureMatrix& data,
                const std::vector<int>& labels);

// Versioned binary checkpoint: JSON descriptor (kind, shape, train config,
// seed) followed by little-endian 64-bit parameter floats. Round-trips
// bit-exactly.
void save_model(const Model& model, const std::filesystem::path& path,
                const TrainConfig& cfg = {});
std::unique_ptr<Model> load_model(const std::filesystem::path& path,
                                  TrainConfig* cfg_out = nullptr);

} // namespace xaudit
