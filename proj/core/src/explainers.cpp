#include "xaudit/explainers.hpp"

#include "xaudit/mathutil.hpp"
#include "xaudit/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <vector>

namespace xaudit {

int method_id(Method method) {
    switch (method) {
    case Method::kLime: return 1;
    case Method::kKernelShap: return 2;
    case Method::kSmoothGrad: return 3;
    case Method::kIntGrad: return 4;
    case Method::kVanillaGrad: return 5;
    }
    return 0;
}

const char* method_name(Method method) {
    switch (method) {
    case Method::kLime: return "LIME";
    case Method::kKernelShap: return "SHAP";
    case Method::kSmoothGrad: return "SmoothGrad";
    case Method::kIntGrad: return "IntGrad";
    case Method::kVanillaGrad: return "VanillaGrad";
    }
    return "?";
}

std::optional<Method> parse_method(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "lime") return Method::kLime;
    if (lower == "shap" || lower == "kernelshap") return Method::kKernelShap;
    if (lower == "smoothgrad") return Method::kSmoothGrad;
    if (lower == "intgrad") return Method::kIntGrad;
    if (lower == "vanillagrad" || lower == "vangrad") return Method::kVanillaGrad;
    return std::nullopt;
}

namespace {

Explanation make_explanation(Eigen::VectorXd w, Method method, std::uint64_t seed,
                             int instance_index) {
    if (!w.allFinite()) {
        throw Error(std::string(method_name(method)) +
                    " produced a non-finite importance vector");
    }
    Explanation e;
    e.importances = std::move(w);
    e.method = method;
    e.seed = seed;
    e.instance_index = instance_index;
    return e;
}

} // namespace

Explanation explain_vanilla_grad(const Model& model, const Eigen::VectorXd& x,
                                 std::uint64_t seed, int instance_index) {
    return make_explanation(model.input_gradient(x), Method::kVanillaGrad, seed,
                            instance_index);
}

Explanation explain_smoothgrad(const Model& model, const Eigen::VectorXd& x,
                               const SmoothGradConfig& cfg, std::uint64_t seed,
                               int instance_index) {
    if (cfg.samples < 1) throw ConfigError("smoothgrad: samples must be at least 1");
    if (cfg.noise_std < 0.0) throw ConfigError("smoothgrad: noise_std must be non-negative");
    if (cfg.noise_std == 0.0) {
        return make_explanation(model.input_gradient(x), Method::kSmoothGrad, seed,
                                instance_index);
    }

    const int d = static_cast<int>(x.size());
    Rng rng(mix64({seed, 0x736D6772ULL})); // "smgr" stream
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd point(d);
    for (int s = 0; s < cfg.samples; ++s) {
        for (int j = 0; j < d; ++j) point(j) = x(j) + cfg.noise_std * rng.normal();
        sum += model.input_gradient(point);
    }
    return make_explanation(sum / static_cast<double>(cfg.samples), Method::kSmoothGrad,
                            seed, instance_index);
}

Explanation explain_intgrad(const Model& model, const Eigen::VectorXd& x,
                            const IntGradConfig& cfg, std::uint64_t seed,
                            int instance_index) {
    if (cfg.steps < 1) throw ConfigError("intgrad: steps must be at least 1");
    const int d = static_cast<int>(x.size());
    Eigen::VectorXd baseline = cfg.baseline;
    if (baseline.size() == 0) {
        baseline = Eigen::VectorXd::Zero(d);
    } else if (static_cast<int>(baseline.size()) != d) {
        throw ShapeError("intgrad: baseline length does not match the instance");
    }

    const Eigen::VectorXd direction = x - baseline;
    Eigen::VectorXd mean_grad = Eigen::VectorXd::Zero(d);
    for (int s = 1; s <= cfg.steps; ++s) {
        const double t = (static_cast<double>(s) - 0.5) / static_cast<double>(cfg.steps);
        mean_grad += model.input_gradient(baseline + t * direction);
    }
    mean_grad /= static_cast<double>(cfg.steps);
    return make_explanation(direction.cwiseProduct(mean_grad), Method::kIntGrad, seed,
                            instance_index);
}

Explanation explain_lime(const Model& model, const Eigen::VectorXd& x,
                         const LimeConfig& cfg, std::uint64_t seed, int instance_index) {
    const int d = static_cast<int>(x.size());
    if (cfg.samples < 1) throw ConfigError("lime: samples must be at least 1");
    if (cfg.perturb_std < 0.0) throw ConfigError("lime: perturb_std must be non-negative");
    if (cfg.ridge_penalty <= 0.0 && cfg.samples < d + 1) {
        throw ConfigError("lime: without a ridge penalty at least d + 1 samples are needed");
    }
    const double kernel_width =
        cfg.kernel_width > 0.0 ? cfg.kernel_width : 0.75 * std::sqrt(static_cast<double>(d));

    // Weighted normal equations over (intercept, slopes); the design is
    // centered at x, which leaves the slopes unchanged but conditions the
    // system.
    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(d + 1, d + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d + 1);

    Rng rng(mix64({seed, 0x6C696D65ULL})); // "lime" stream
    Eigen::VectorXd z(d);
    for (int s = 0; s < cfg.samples; ++s) {
        for (int j = 0; j < d; ++j) z(j) = cfg.perturb_std * rng.normal();
        const double response = model.predict_proba(x + z);
        const double weight = std::exp(-z.squaredNorm() / (kernel_width * kernel_width));

        normal(0, 0) += weight;
        normal.block(0, 1, 1, d) += weight * z.transpose();
        normal.block(1, 0, d, 1) += weight * z;
        normal.block(1, 1, d, d).selfadjointView<Eigen::Lower>().rankUpdate(z, weight);
        rhs(0) += weight * response;
        rhs.tail(d) += weight * response * z;
    }
    normal.block(1, 1, d, d) =
        normal.block(1, 1, d, d).selfadjointView<Eigen::Lower>();
    if (cfg.ridge_penalty > 0.0) {
        normal.block(1, 1, d, d).diagonal().array() += cfg.ridge_penalty;
    }

    const Eigen::VectorXd solution = normal.ldlt().solve(rhs);
    return make_explanation(solution.tail(d), Method::kLime, seed, instance_index);
}

namespace {

double binomial(int n, int k) {
    double result = 1.0;
    for (int i = 1; i <= k; ++i) {
        result *= static_cast<double>(n - k + i) / static_cast<double>(i);
    }
    return result;
}

} // namespace

Explanation explain_kernelshap(const Model& model, const Eigen::VectorXd& x,
                               const KernelShapConfig& cfg, std::uint64_t seed,
                               int instance_index) {
    const int d = static_cast<int>(x.size());
    if (cfg.samples < 1) throw ConfigError("kernelshap: samples must be at least 1");
    Eigen::VectorXd background = cfg.background;
    if (background.size() == 0) {
        background = Eigen::VectorXd::Zero(d);
    } else if (static_cast<int>(background.size()) != d) {
        throw ShapeError("kernelshap: background length does not match the instance");
    }

    const double h_x = model.predict_proba(x);
    const double h_bg = model.predict_proba(background);
    const double delta = h_x - h_bg;

    if (d == 1) {
        Eigen::VectorXd phi(1);
        phi(0) = delta;
        return make_explanation(std::move(phi), Method::kKernelShap, seed, instance_index);
    }

    // The empty and full coalitions pin the intercept and the total, so the
    // regression runs over proper nonempty coalitions only. Eliminating the
    // last feature enforces sum(phi) = h(x) - h(background) exactly.
    const int reduced = d - 1;
    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(reduced, reduced);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(reduced);
    Eigen::VectorXd masked(d);
    Eigen::VectorXd row(reduced);

    auto accumulate = [&](const std::vector<std::uint8_t>& mask, double weight) {
        for (int j = 0; j < d; ++j) masked(j) = mask[static_cast<std::size_t>(j)] ? x(j) : background(j);
        const double value = model.predict_proba(masked) - h_bg;
        const double last = mask[static_cast<std::size_t>(d - 1)] ? 1.0 : 0.0;
        for (int j = 0; j < reduced; ++j) {
            row(j) = (mask[static_cast<std::size_t>(j)] ? 1.0 : 0.0) - last;
        }
        const double target = value - last * delta;
        normal.selfadjointView<Eigen::Lower>().rankUpdate(row, weight);
        rhs += weight * target * row;
    };

    const bool enumerate_all =
        d <= 30 && (1ULL << d) - 2ULL <= static_cast<unsigned long long>(cfg.samples);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(d));

    if (enumerate_all) {
        for (std::uint64_t bits = 1; bits + 1 < (1ULL << d); ++bits) {
            int size = 0;
            for (int j = 0; j < d; ++j) {
                mask[static_cast<std::size_t>(j)] = (bits >> j) & 1ULL;
                size += mask[static_cast<std::size_t>(j)];
            }
            const double weight = static_cast<double>(d - 1) /
                                  (binomial(d, size) * static_cast<double>(size) *
                                   static_cast<double>(d - size));
            accumulate(mask, weight);
        }
    } else {
        // Coalitions drawn with probability proportional to the Shapley
        // kernel; the subset-count factor cancels, so the size distribution
        // is ~ 1 / (s (d - s)) and each sampled row carries unit weight.
        std::vector<double> cumulative(static_cast<std::size_t>(d - 1));
        double total = 0.0;
        for (int s = 1; s < d; ++s) {
            total += 1.0 / (static_cast<double>(s) * static_cast<double>(d - s));
            cumulative[static_cast<std::size_t>(s - 1)] = total;
        }

        Rng rng(mix64({seed, 0x73686170ULL})); // "shap" stream
        std::vector<int> order(static_cast<std::size_t>(d));
        std::iota(order.begin(), order.end(), 0);
        for (int s = 0; s < cfg.samples; ++s) {
            const double u = rng.uniform01() * total;
            int size = 1;
            while (size < d - 1 && u > cumulative[static_cast<std::size_t>(size - 1)]) {
                ++size;
            }
            // Partial Fisher-Yates: the first `size` entries become the coalition.
            for (int j = 0; j < size; ++j) {
                const int k = j + static_cast<int>(rng.uniform_int(
                                      static_cast<std::uint64_t>(d - j)));
                std::swap(order[static_cast<std::size_t>(j)],
                          order[static_cast<std::size_t>(k)]);
            }
            std::fill(mask.begin(), mask.end(), std::uint8_t{0});
            for (int j = 0; j < size; ++j) {
                mask[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])] = 1;
            }
            accumulate(mask, 1.0);
        }
        // Tiny Tikhonov guard: sampled designs can be rank-deficient.
        normal.diagonal().array() += 1e-10;
    }

    Eigen::MatrixXd full = normal.selfadjointView<Eigen::Lower>();
    const Eigen::VectorXd reduced_phi = full.ldlt().solve(rhs);

    Eigen::VectorXd phi(d);
    phi.head(reduced) = reduced_phi;
    phi(d - 1) = delta - reduced_phi.sum();
    return make_explanation(std::move(phi), Method::kKernelShap, seed, instance_index);
}

Explanation explain(Method method, const Model& model, const Eigen::VectorXd& x,
                    const ExplainerConfig& cfg, std::uint64_t seed, int instance_index) {
    switch (method) {
    case Method::kVanillaGrad:
        return explain_vanilla_grad(model, x, seed, instance_index);
    case Method::kSmoothGrad:
        return explain_smoothgrad(model, x, cfg.smoothgrad, seed, instance_index);
    case Method::kIntGrad:
        return explain_intgrad(model, x, cfg.intgrad, seed, instance_index);
    case Method::kLime:
        return explain_lime(model, x, cfg.lime, seed, instance_index);
    case Method::kKernelShap:
        return explain_kernelshap(model, x, cfg.kernelshap, seed, instance_index);
    }
    throw ConfigError("unknown explanation method");
}

} // namespace xaudit
