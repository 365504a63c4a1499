#pragma once

#include "xaudit/models.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace xaudit {

// The five local attribution methods, all behind one seeded entry point.
enum class Method { kLime, kKernelShap, kSmoothGrad, kIntGrad, kVanillaGrad };

inline constexpr Method kAllMethods[] = {Method::kLime, Method::kKernelShap,
                                         Method::kSmoothGrad, Method::kIntGrad,
                                         Method::kVanillaGrad};

// Stable integer identity used in seed derivation; never reorder.
int method_id(Method method);
const char* method_name(Method method); // "LIME", "SHAP", ...
std::optional<Method> parse_method(std::string_view name);

// Per-instance feature-importance vector.
struct Explanation {
    Eigen::VectorXd importances;
    int instance_index = -1;
    Method method = Method::kVanillaGrad;
    std::uint64_t seed = 0;
};

struct SmoothGradConfig {
    double noise_std = 1.0; // standard normal by default
    int samples = 1000;
};

struct IntGradConfig {
    // Empty means the all-zeros baseline in standardized space (the
    // per-feature training mean in raw space).
    Eigen::VectorXd baseline;
    int steps = 50;
};

struct LimeConfig {
    int samples = 5000;
    double kernel_width = 0.0; // <= 0 resolves to 0.75 * sqrt(d)
    double ridge_penalty = 1.0;
    double perturb_std = 1.0;
};

struct KernelShapConfig {
    int samples = 1000;
    // Reference values for features outside a coalition; the harness fills
    // this with the training-set column means. Empty means all zeros.
    Eigen::VectorXd background;
};

struct ExplainerConfig {
    SmoothGradConfig smoothgrad;
    IntGradConfig intgrad;
    LimeConfig lime;
    KernelShapConfig kernelshap;
};

// w = dh/dx at x. Deterministic; the seed is recorded but unused.
Explanation explain_vanilla_grad(const Model& model, const Eigen::VectorXd& x,
                                 std::uint64_t seed = 0, int instance_index = -1);

// Mean gradient over cfg.samples draws of x + z, z ~ N(0, noise_std^2 I).
// noise_std == 0 degenerates to the plain gradient.
Explanation explain_smoothgrad(const Model& model, const Eigen::VectorXd& x,
                               const SmoothGradConfig& cfg, std::uint64_t seed,
                               int instance_index = -1);

// Midpoint Riemann sum along the straight path from the baseline:
// w_j = (x_j - b_j) * mean_s dh/dx_j at b + ((s - 0.5)/S)(x - b).
// Deterministic; the seed is recorded but unused.
Explanation explain_intgrad(const Model& model, const Eigen::VectorXd& x,
                            const IntGradConfig& cfg, std::uint64_t seed = 0,
                            int instance_index = -1);

// Gaussian perturbations around x, responses h(x'), weights
// exp(-|x - x'|^2 / kernel_width^2), ridge fit with the penalty on slopes
// only. w = fitted slopes.
Explanation explain_lime(const Model& model, const Eigen::VectorXd& x,
                         const LimeConfig& cfg, std::uint64_t seed,
                         int instance_index = -1);

// Shapley-kernel-weighted regression on masked inputs against the background,
// constrained so the attributions sum to h(x) - h(background). Enumerates all
// 2^d - 2 proper coalitions when that fits the sample budget, otherwise
// samples coalitions from the kernel distribution.
Explanation explain_kernelshap(const Model& model, const Eigen::VectorXd& x,
                               const KernelShapConfig& cfg, std::uint64_t seed,
                               int instance_index = -1);

Explanation explain(Method method, const Model& model, const Eigen::VectorXd& x,
                    const ExplainerConfig& cfg, std::uint64_t seed,
                    int instance_index = -1);

} // namespace xaudit
