#include "ptrlab/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace ptrlab::grpo {

void GrpoConfig::validate() const {
    if (group_size < 2) {
        throw std::invalid_argument("group_size: K must be >= 2, got " + std::to_string(group_size));
    }
    if (!(kl_coefficient >= 0.0)) {
        throw std::invalid_argument("kl_coefficient: must be >= 0");
    }
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("learning_rate: must be > 0");
    }
    if (!(std_floor >= 0.0)) {
        throw std::invalid_argument("std_floor: must be >= 0");
    }
}

std::vector<double> group_advantages(std::span<const double> rewards, double std_floor) {
    if (rewards.size() < 2) {
        throw std::invalid_argument("group_advantages: need at least 2 rewards, got " + std::to_string(rewards.size()));
    }
    const auto k = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) {
        mean += r;
    }
    mean /= k;
    double var = 0.0;
    for (double r : rewards) {
        var += (r - mean) * (r - mean);
    }
    const double sd = std::sqrt(var / k);
    std::vector<double> adv(rewards.size(), 0.0);
    if (!(sd >= std_floor) || sd == 0.0) {
        return adv;
    }
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        adv[i] = (rewards[i] - mean) / sd;
    }
    return adv;
}

double kl_k3(double logp, double logp_ref) {
    const double d = logp_ref - logp;
    // expm1 keeps precision near d = 0; clamp tiny negative rounding.
    return std::max(0.0, std::expm1(d) - d);
}

Objective grpo_objective(std::span<const PolicySample> samples, double kl_coefficient) {
    if (samples.empty()) {
        throw std::invalid_argument("grpo_objective: empty group");
    }
    const auto k = static_cast<double>(samples.size());
    Objective out;
    out.logp_weights.reserve(samples.size());
    double acc = 0.0;
    double kl = 0.0;
    for (const auto& s : samples) {
        const double k3 = kl_k3(s.logp, s.logp_ref);
        acc += s.advantage * s.logp - kl_coefficient * k3;
        kl += k3;
        out.logp_weights.push_back(-(s.advantage + kl_coefficient * std::expm1(s.logp_ref - s.logp)) / k);
    }
    out.loss = -acc / k;
    out.kl_mean = kl / k;
    return out;
}

std::vector<double> apply_gradient(std::span<const double> params, std::span<const double> gradient,
                                   double learning_rate) {
    if (params.size() != gradient.size()) {
        throw std::invalid_argument("apply_gradient: shape mismatch (" + std::to_string(params.size()) + " vs " +
                                    std::to_string(gradient.size()) + ")");
    }
    std::vector<double> out(params.begin(), params.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] -= learning_rate * gradient[i];
    }
    return out;
}

toyenv::ToyPolicyParams apply_gradient(const toyenv::ToyPolicyParams& params, const toyenv::ToyPolicyParams& gradient,
                                       double learning_rate) {
    if (params.emotion_count != gradient.emotion_count ||
        params.label_weights.size() != gradient.label_weights.size()) {
        throw std::invalid_argument("apply_gradient: shape mismatch");
    }
    const auto flat = apply_gradient(params.flatten(), gradient.flatten(), learning_rate);
    return toyenv::ToyPolicyParams::unflatten(params.emotion_count, flat);
}

GradientCheckReport finite_difference_check(std::span<const double> params, std::span<const double> analytic,
                                            const LossFunction& loss, double epsilon, std::size_t probe_count,
                                            std::uint64_t seed) {
    if (params.size() != analytic.size()) {
        throw std::invalid_argument("finite_difference_check: gradient size mismatch");
    }
    if (params.empty()) {
        throw std::invalid_argument("finite_difference_check: no parameters");
    }
    GradientCheckReport report;
    std::mt19937_64 rng(seed);
    std::vector<double> probe(params.begin(), params.end());
    for (std::size_t p = 0; p < probe_count; ++p) {
        const std::size_t idx = static_cast<std::size_t>(rng() % params.size());
        const double original = probe[idx];
        probe[idx] = original + epsilon;
        const double up = loss(probe);
        probe[idx] = original - epsilon;
        const double down = loss(probe);
        probe[idx] = original;

        ProbeResult r;
        r.index = idx;
        r.analytic = analytic[idx];
        r.numeric = (up - down) / (2.0 * epsilon);
        r.relative_error = std::abs(r.analytic - r.numeric) / std::max(1e-8, std::abs(r.analytic) + std::abs(r.numeric));
        report.max_relative_error = std::max(report.max_relative_error, r.relative_error);
        report.probes.push_back(r);
    }
    return report;
}

}  // namespace ptrlab::grpo
