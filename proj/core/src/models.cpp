#include "xaudit/models.hpp"

#include "xaudit/mathutil.hpp"
#include "xaudit/rng.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>

namespace xaudit {

namespace {

constexpr char kCheckpointMagic[8] = {'X', 'A', 'U', 'D', 'M', 'D', 'L', '1'};
constexpr double kGradientTolerance = 1e-8;

void check_dim(const Eigen::VectorXd& x, int d) {
    if (static_cast<int>(x.size()) != d) {
        throw ShapeError("expected a vector of length " + std::to_string(d) + ", got " +
                         std::to_string(x.size()));
    }
    if (!x.allFinite()) throw InputError("input vector has non-finite entries");
}

void check_training_inputs(const FeatureMatrix& train, const std::vector<int>& labels) {
    if (train.rows() < 2) throw InputError("training needs at least 2 rows");
    if (static_cast<int>(labels.size()) != train.rows()) {
        throw ShapeError("label count does not match training rows");
    }
    bool has0 = false, has1 = false;
    for (int y : labels) {
        (y == 0 ? has0 : has1) = true;
    }
    if (!has0 || !has1) {
        throw DegenerateLabelsError("training labels contain a single class");
    }
}

// Adaptive-moment update for one parameter block.
class Adam {
public:
    Adam(Eigen::Index rows, Eigen::Index cols, const TrainConfig& cfg)
        : cfg_(cfg),
          m_(Eigen::MatrixXd::Zero(rows, cols)),
          v_(Eigen::MatrixXd::Zero(rows, cols)) {}

    void step(Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& grad, long t) {
        m_ = cfg_.adam_beta1 * m_ + (1.0 - cfg_.adam_beta1) * grad;
        v_ = cfg_.adam_beta2 * v_.array().matrix() +
             (1.0 - cfg_.adam_beta2) * grad.array().square().matrix();
        const double bias1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t));
        const double bias2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t));
        param.array() -= cfg_.learning_rate * (m_.array() / bias1) /
                         ((v_.array() / bias2).sqrt() + cfg_.adam_epsilon);
    }

private:
    TrainConfig cfg_;
    Eigen::MatrixXd m_, v_;
};

std::vector<std::vector<int>> make_batches(std::vector<int>& indices, int batch_size,
                                           Rng& rng) {
    rng.shuffle(indices);
    std::vector<std::vector<int>> batches;
    for (std::size_t start = 0; start < indices.size(); start += batch_size) {
        const std::size_t end = std::min(indices.size(), start + batch_size);
        batches.emplace_back(indices.begin() + start, indices.begin() + end);
    }
    return batches;
}

} // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
        !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw ConfigError("adam decay rates must lie in [0, 1)");
    }
    if (!(adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be positive");
    if (l2_penalty < 0.0) throw ConfigError("l2_penalty must be non-negative");
}

// ---------------------------------------------------------------------------
// LinearModel
// ---------------------------------------------------------------------------

LinearModel::LinearModel(Eigen::VectorXd coefficients, double intercept)
    : coefficients_(std::move(coefficients)), intercept_(intercept) {
    if (coefficients_.size() < 1) throw ShapeError("linear model needs at least 1 coefficient");
}

double LinearModel::predict_proba(const Eigen::VectorXd& x) const {
    check_dim(x, dim());
    return logistic(coefficients_.dot(x) + intercept_);
}

Eigen::VectorXd LinearModel::input_gradient(const Eigen::VectorXd& x) const {
    const double h = predict_proba(x);
    return h * (1.0 - h) * coefficients_;
}

// ---------------------------------------------------------------------------
// MlpModel
// ---------------------------------------------------------------------------

MlpModel::MlpModel(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ShapeError("mlp needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (layers_[l].weights.rows() != layers_[l].biases.size()) {
            throw ShapeError("layer " + std::to_string(l) + " weight/bias mismatch");
        }
        if (l > 0 && layers_[l].weights.cols() != layers_[l - 1].weights.rows()) {
            throw ShapeError("layer " + std::to_string(l) + " input width mismatch");
        }
    }
    if (layers_.back().weights.rows() != 1) {
        throw ShapeError("output layer must have a single unit");
    }
}

std::vector<int> MlpModel::hidden_widths() const {
    std::vector<int> widths;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        widths.push_back(static_cast<int>(layers_[l].weights.rows()));
    }
    return widths;
}

double MlpModel::predict_proba(const Eigen::VectorXd& x) const {
    check_dim(x, dim());
    Eigen::VectorXd a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Eigen::VectorXd z = layers_[l].weights * a + layers_[l].biases;
        if (l + 1 < layers_.size()) {
            a = z.cwiseMax(0.0);
        } else {
            return logistic(z(0));
        }
    }
    return 0.5; // unreachable
}

Eigen::VectorXd MlpModel::input_gradient(const Eigen::VectorXd& x) const {
    check_dim(x, dim());
    // Forward pass, keeping pre-activations for the rectifier masks.
    std::vector<Eigen::VectorXd> pre(layers_.size());
    Eigen::VectorXd a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        pre[l] = layers_[l].weights * a + layers_[l].biases;
        if (l + 1 < layers_.size()) a = pre[l].cwiseMax(0.0);
    }
    const double h = logistic(pre.back()(0));

    // Reverse pass: d h / d z_last = h (1 - h); rectifier derivative at 0 is 0.
    Eigen::VectorXd delta = Eigen::VectorXd::Constant(1, h * (1.0 - h));
    for (std::size_t l = layers_.size(); l-- > 0;) {
        Eigen::VectorXd back = layers_[l].weights.transpose() * delta;
        if (l == 0) return back;
        delta = back.array() * (pre[l - 1].array() > 0.0).cast<double>();
    }
    return delta; // unreachable
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

LinearModel train_logistic(const FeatureMatrix& train, const std::vector<int>& labels,
                           const TrainConfig& cfg) {
    cfg.validate();
    check_training_inputs(train, labels);

    const int n = train.rows();
    const int d = train.dim();
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = static_cast<double>(labels[i]);

    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    double b = 0.0;
    Adam adam_w(d, 1, cfg);
    Adam adam_b(1, 1, cfg);
    long t = 0;

    Rng shuffle_rng(mix64({cfg.seed, 0x74726C72ULL})); // "trlr" stream
    std::vector<int> indices(n);
    std::iota(indices.begin(), indices.end(), 0);

    Eigen::MatrixXd bias_param(1, 1);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (const auto& batch : make_batches(indices, cfg.batch_size, shuffle_rng)) {
            const int m = static_cast<int>(batch.size());
            Eigen::VectorXd residual(m);
            Eigen::MatrixXd xb(m, d);
            for (int i = 0; i < m; ++i) {
                xb.row(i) = train.X.row(batch[i]);
                const double h = logistic(w.dot(xb.row(i)) + b);
                residual(i) = h - y(batch[i]);
            }
            const Eigen::VectorXd grad_w =
                xb.transpose() * residual / static_cast<double>(m) + cfg.l2_penalty * w;
            const double grad_b = residual.mean();
            ++t;
            adam_w.step(w, grad_w, t);
            bias_param(0, 0) = b;
            Eigen::MatrixXd gb(1, 1);
            gb(0, 0) = grad_b;
            adam_b.step(bias_param, gb, t);
            b = bias_param(0, 0);
        }

        // Full-data gradient check for early convergence.
        Eigen::VectorXd p(n);
        for (int i = 0; i < n; ++i) p(i) = logistic(w.dot(train.X.row(i)) + b);
        const Eigen::VectorXd full_grad =
            train.X.transpose() * (p - y) / static_cast<double>(n) + cfg.l2_penalty * w;
        const double gb_full = (p - y).mean();
        if (std::sqrt(full_grad.squaredNorm() + gb_full * gb_full) <= kGradientTolerance) {
            break;
        }
    }
    return LinearModel(std::move(w), b);
}

MlpModel train_mlp(const FeatureMatrix& train, const std::vector<int>& labels,
                   const TrainConfig& cfg, const std::vector<int>& hidden_widths) {
    cfg.validate();
    check_training_inputs(train, labels);
    for (int width : hidden_widths) {
        if (width < 1) throw ConfigError("hidden layer width must be positive");
    }

    const int n = train.rows();
    const int d = train.dim();

    std::vector<int> widths;
    widths.push_back(d);
    widths.insert(widths.end(), hidden_widths.begin(), hidden_widths.end());
    widths.push_back(1);

    // Uniform +/- sqrt(6 / (fan_in + fan_out)) init, biases zero. Fill order is
    // fixed (row-major per layer) so identical seeds give identical weights.
    Rng init_rng(mix64({cfg.seed, 0x696E6974ULL})); // "init" stream
    std::vector<MlpModel::Layer> layers;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const int fan_in = widths[l];
        const int fan_out = widths[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        MlpModel::Layer layer;
        layer.weights.resize(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r) {
            for (int c = 0; c < fan_in; ++c) {
                layer.weights(r, c) = (2.0 * init_rng.uniform01() - 1.0) * limit;
            }
        }
        layer.biases = Eigen::VectorXd::Zero(fan_out);
        layers.push_back(std::move(layer));
    }

    const std::size_t n_layers = layers.size();
    std::vector<Adam> adam_w, adam_b;
    for (const auto& layer : layers) {
        adam_w.emplace_back(layer.weights.rows(), layer.weights.cols(), cfg);
        adam_b.emplace_back(layer.biases.size(), 1, cfg);
    }

    Rng shuffle_rng(mix64({cfg.seed, 0x73687566ULL})); // "shuf" stream
    std::vector<int> indices(n);
    std::iota(indices.begin(), indices.end(), 0);
    long t = 0;

    std::vector<Eigen::MatrixXd> pre(n_layers);       // pre-activations, unit x batch
    std::vector<Eigen::MatrixXd> activ(n_layers + 1); // activ[0] is the input block

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        long epoch_count = 0;
        for (const auto& batch : make_batches(indices, cfg.batch_size, shuffle_rng)) {
            const int m = static_cast<int>(batch.size());
            activ[0].resize(d, m);
            Eigen::RowVectorXd yb(m);
            for (int i = 0; i < m; ++i) {
                activ[0].col(i) = train.X.row(batch[i]).transpose();
                yb(i) = static_cast<double>(labels[batch[i]]);
            }

            for (std::size_t l = 0; l < n_layers; ++l) {
                pre[l] = (layers[l].weights * activ[l]).colwise() + layers[l].biases;
                activ[l + 1] = (l + 1 < n_layers) ? pre[l].cwiseMax(0.0) : pre[l];
            }

            const Eigen::RowVectorXd z = pre.back().row(0);
            Eigen::RowVectorXd p(m);
            for (int i = 0; i < m; ++i) {
                p(i) = logistic(z(i));
                epoch_loss += softplus(z(i)) - yb(i) * z(i);
            }
            epoch_count += m;

            // Backward pass.
            Eigen::MatrixXd delta = (p - yb) / static_cast<double>(m);
            for (std::size_t l = n_layers; l-- > 0;) {
                const Eigen::MatrixXd grad_w = delta * activ[l].transpose();
                const Eigen::VectorXd grad_b = delta.rowwise().sum();
                Eigen::MatrixXd next_delta;
                if (l > 0) {
                    next_delta = (layers[l].weights.transpose() * delta).array() *
                                 (pre[l - 1].array() > 0.0).cast<double>();
                }
                ++t;
                adam_w[l].step(layers[l].weights, grad_w, t);
                Eigen::MatrixXd bias_view = layers[l].biases;
                adam_b[l].step(bias_view, grad_b, t);
                layers[l].biases = bias_view;
                if (l > 0) delta = std::move(next_delta);
            }
        }
        if (!std::isfinite(epoch_loss / static_cast<double>(epoch_count))) {
            throw DivergenceError("training loss became non-finite at epoch " +
                                  std::to_string(epoch));
        }
    }
    return MlpModel(std::move(layers));
}

Eigen::VectorXd ground_truth_weights(const Model& model) {
    const auto* linear = dynamic_cast<const LinearModel*>(&model);
    if (linear == nullptr) {
        throw UnsupportedModelError("ground-truth weights exist only for linear models");
    }
    return linear->coefficients().cwiseAbs();
}

double accuracy(const Model& model, const FeatureMatrix& data,
                const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != data.rows()) {
        throw ShapeError("label count does not match rows");
    }
    int correct = 0;
    for (int i = 0; i < data.rows(); ++i) {
        const int predicted = model.predict_proba(data.X.row(i)) >= 0.5 ? 1 : 0;
        if (predicted == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.rows());
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
    char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(bytes, 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    return v;
}

void write_f64(std::ostream& out, double d) {
    const auto bits = std::bit_cast<std::uint64_t>(d);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    out.write(bytes, 8);
}

double read_f64(std::istream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
    return {{"epochs", cfg.epochs},
            {"batch_size", cfg.batch_size},
            {"learning_rate", cfg.learning_rate},
            {"adam_beta1", cfg.adam_beta1},
            {"adam_beta2", cfg.adam_beta2},
            {"adam_epsilon", cfg.adam_epsilon},
            {"l2_penalty", cfg.l2_penalty},
            {"seed", cfg.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.adam_beta1 = j.value("adam_beta1", cfg.adam_beta1);
    cfg.adam_beta2 = j.value("adam_beta2", cfg.adam_beta2);
    cfg.adam_epsilon = j.value("adam_epsilon", cfg.adam_epsilon);
    cfg.l2_penalty = j.value("l2_penalty", cfg.l2_penalty);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

} // namespace

void save_model(const Model& model, const std::filesystem::path& path,
                const TrainConfig& cfg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());

    nlohmann::json header;
    header["kind"] = model.kind();
    header["dim"] = model.dim();
    header["train"] = train_config_to_json(cfg);

    std::vector<double> params;
    if (const auto* linear = dynamic_cast<const LinearModel*>(&model)) {
        params.assign(linear->coefficients().data(),
                      linear->coefficients().data() + linear->coefficients().size());
        params.push_back(linear->intercept());
    } else if (const auto* mlp = dynamic_cast<const MlpModel*>(&model)) {
        header["hidden_widths"] = mlp->hidden_widths();
        for (const auto& layer : mlp->layers()) {
            for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
                for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
                    params.push_back(layer.weights(r, c));
                }
            }
            for (Eigen::Index r = 0; r < layer.biases.size(); ++r) {
                params.push_back(layer.biases(r));
            }
        }
    } else {
        throw UnsupportedModelError("cannot checkpoint this model kind");
    }

    const std::string header_text = header.dump();
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    write_u32(out, static_cast<std::uint32_t>(header_text.size()));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    write_u32(out, static_cast<std::uint32_t>(params.size()));
    for (double p : params) write_f64(out, p);
    if (!out) throw IoError("write failed for " + path.string());
}

std::unique_ptr<Model> load_model(const std::filesystem::path& path, TrainConfig* cfg_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
        throw IoError("not an xaudit model checkpoint: " + path.string());
    }
    const std::uint32_t header_len = read_u32(in);
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), header_len);
    if (!in) throw IoError("truncated checkpoint header");
    const nlohmann::json header = nlohmann::json::parse(header_text);

    const std::uint32_t param_count = read_u32(in);
    std::vector<double> params(param_count);
    for (auto& p : params) p = read_f64(in);
    if (!in) throw IoError("truncated checkpoint parameters");

    if (cfg_out != nullptr && header.contains("train")) {
        *cfg_out = train_config_from_json(header["train"]);
    }

    const std::string kind = header.at("kind").get<std::string>();
    const int d = header.at("dim").get<int>();
    std::size_t cursor = 0;
    auto take = [&]() {
        if (cursor >= params.size()) throw IoError("checkpoint parameter underrun");
        return params[cursor++];
    };

    if (kind == "lr") {
        Eigen::VectorXd w(d);
        for (int j = 0; j < d; ++j) w(j) = take();
        const double b = take();
        return std::make_unique<LinearModel>(std::move(w), b);
    }
    if (kind == "nn") {
        const auto hidden = header.at("hidden_widths").get<std::vector<int>>();
        std::vector<int> widths;
        widths.push_back(d);
        widths.insert(widths.end(), hidden.begin(), hidden.end());
        widths.push_back(1);
        std::vector<MlpModel::Layer> layers;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            MlpModel::Layer layer;
            layer.weights.resize(widths[l + 1], widths[l]);
            for (int r = 0; r < widths[l + 1]; ++r) {
                for (int c = 0; c < widths[l]; ++c) layer.weights(r, c) = take();
            }
            layer.biases.resize(widths[l + 1]);
            for (int r = 0; r < widths[l + 1]; ++r) layer.biases(r) = take();
            layers.push_back(std::move(layer));
        }
        return std::make_unique<MlpModel>(std::move(layers));
    }
    throw IoError("unknown model kind '" + kind + "' in " + path.string());
}

} // namespace xaudit
