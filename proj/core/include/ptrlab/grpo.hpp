#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ptrlab/policy.hpp"

namespace ptrlab::grpo {

struct GrpoConfig {
    int group_size = 8;
    double kl_coefficient = 0.04;
    double learning_rate = 0.03;
    double clip_epsilon = 0.2;  // inert for single-step on-policy updates
    double std_floor = 1e-8;

    /// Throws std::invalid_argument naming the first violated field.
    void validate() const;
};

/// Group-normalized advantages (R_i - mean) / std with the population standard deviation.
/// All zeros when std < std_floor. Throws std::invalid_argument for fewer than two rewards.
std::vector<double> group_advantages(std::span<const double> rewards, double std_floor = 1e-8);

/// Non-negative per-sample KL estimate exp(d) - d - 1 with d = logp_ref - logp.
double kl_k3(double logp, double logp_ref);

struct PolicySample {
    double logp = 0.0;
    double logp_ref = 0.0;
    double advantage = 0.0;
};

struct Objective {
    double loss = 0.0;
    std::vector<double> logp_weights;  // d loss / d logp_i
    double kl_mean = 0.0;
};

/// loss = -(1/K) sum_i [A_i logp_i - beta kl_k3(logp_i, logp_ref_i)]. Advantages and reference
/// log-probabilities are constants; the returned weights are the derivatives with respect to each logp_i.
Objective grpo_objective(std::span<const PolicySample> samples, double kl_coefficient);

/// params - learning_rate * gradient. Throws std::invalid_argument on a size mismatch.
std::vector<double> apply_gradient(std::span<const double> params, std::span<const double> gradient,
                                   double learning_rate);
toyenv::ToyPolicyParams apply_gradient(const toyenv::ToyPolicyParams& params,
                                       const toyenv::ToyPolicyParams& gradient, double learning_rate);

struct ProbeResult {
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double relative_error = 0.0;
};

struct GradientCheckReport {
    std::vector<ProbeResult> probes;
    double max_relative_error = 0.0;
};

using LossFunction = std::function<double(std::span<const double>)>;

/// Compares `analytic` against central differences of `loss` on `probe_count` coordinates chosen
/// with a seeded generator. Relative error is |a - n| / max(1e-8, |a| + |n|).
GradientCheckReport finite_difference_check(std::span<const double> params, std::span<const double> analytic,
                                            const LossFunction& loss, double epsilon, std::size_t probe_count,
                                            std::uint64_t seed);

}  // namespace ptrlab::grpo
