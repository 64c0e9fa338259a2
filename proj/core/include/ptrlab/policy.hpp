#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ptrlab::toyenv {

/// Length of a query feature vector: one-hot pitch(3), energy(3), speed(3), intonation(4), bias.
inline constexpr std::size_t kFeatureCount = 14;

/// Parameters of the toy policy: a softmax over emotion labels and a single fidelity logit that
/// controls how often reasoning claims report the true prosodic category.
struct ToyPolicyParams {
    std::size_t emotion_count = 0;
    std::vector<double> label_weights;  // emotion_count x kFeatureCount, row-major
    double fidelity_logit = 0.0;

    ToyPolicyParams() = default;
    explicit ToyPolicyParams(std::size_t emotions, double fidelity_logit = 0.0);

    double& weight(std::size_t emotion, std::size_t feature) { return label_weights[emotion * kFeatureCount + feature]; }
    double weight(std::size_t emotion, std::size_t feature) const {
        return label_weights[emotion * kFeatureCount + feature];
    }

    /// Logistic of the fidelity logit, strictly inside (0, 1) for finite logits.
    double fidelity() const;

    std::size_t parameter_count() const { return label_weights.size() + 1; }
    /// Label weights followed by the fidelity logit.
    std::vector<double> flatten() const;
    static ToyPolicyParams unflatten(std::size_t emotions, std::span<const double> flat);

    bool all_finite() const;

    friend bool operator==(const ToyPolicyParams&, const ToyPolicyParams&) = default;
};

}  // namespace ptrlab::toyenv
