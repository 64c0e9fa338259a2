#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptrlab/grpo.hpp"
#include "ptrlab/policy.hpp"
#include "ptrlab/reward.hpp"

namespace ptrlab::toyenv {

/// Slot order: pitch level, energy level, speed level, intonation pattern.
inline constexpr std::array<int, 4> kSlotSizes = {3, 3, 3, 4};
inline constexpr std::array<const char*, 4> kSlotNames = {"pitch", "energy", "pace", "intonation"};

/// Category index per slot, e.g. {2, 2, 2, 0} = high pitch, high energy, fast, rising.
using Slots = std::array<int, 4>;

/// Category name as used in rendered reasoning ("low", "fast", "rising_falling", ...).
std::string slot_category_name(std::size_t slot, int category);

struct Prototype {
    reward::Emotion emotion;
    Slots slots;
};

class PrototypeTable {
public:
    /// Throws std::invalid_argument on duplicate emotions, duplicate slot rows or out-of-range categories.
    explicit PrototypeTable(std::vector<Prototype> rows);

    /// The first `emotions` rows of the nine-emotion reference table (2..9). Four gives
    /// Neutral, Happy, Sad and Angry.
    static PrototypeTable reference(std::size_t emotions = 4);

    std::size_t size() const { return rows_.size(); }
    const Prototype& row(std::size_t i) const { return rows_.at(i); }
    const std::vector<Prototype>& rows() const { return rows_; }
    std::optional<std::size_t> index_of(reward::Emotion e) const;

private:
    std::vector<Prototype> rows_;
};

struct ToyQuery {
    Slots true_slots{};
    reward::Emotion gold_label = reward::Emotion::Neutral;
    std::size_t gold_index = 0;
    std::array<double, kFeatureCount> features{};
};

std::array<double, kFeatureCount> encode_features(const Slots& slots);

/// Uniform double in [0, 1) from the top 53 bits of one engine draw; identical on every platform.
double uniform01(std::mt19937_64& rng);

/// Engine for an independent stream keyed by (seed, a, b), e.g. (seed, step, query index).
std::mt19937_64 derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

ToyQuery sample_query(std::mt19937_64& rng, double noise, const PrototypeTable& table);

/// n queries with uniformly drawn emotions; each slot is independently replaced by a different
/// uniformly chosen category with probability `noise`.
std::vector<ToyQuery> generate_dataset(std::uint64_t seed, std::size_t n, double noise, const PrototypeTable& table);

struct ToyResponse {
    reward::Emotion label = reward::Emotion::Neutral;
    std::size_t label_index = 0;
    Slots claims{};
    double label_logprob = 0.0;
    std::array<double, 4> claim_logprobs{};
    std::string rendered_text;

    double total_logprob() const;
};

/// Softmax label probabilities for a query.
std::vector<double> label_probabilities(const ToyPolicyParams& params, const ToyQuery& query);

/// ln P(claim) for one slot: fidelity * [claim == truth] + (1 - fidelity) / categories.
double claim_logprob(double fidelity_logit, int categories, bool matches_truth);

ToyResponse policy_sample(const ToyPolicyParams& params, const ToyQuery& query, const PrototypeTable& table,
                          std::mt19937_64& rng);

/// Log-probability the policy assigns to (label, claims) for this query.
double response_logprob(const ToyPolicyParams& params, const ToyQuery& query, std::size_t label_index,
                        const Slots& claims);

/// Adds weight * d/dparams response_logprob(...) into `gradient`.
void accumulate_logprob_gradient(const ToyPolicyParams& params, const ToyQuery& query, std::size_t label_index,
                                 const Slots& claims, double weight, ToyPolicyParams& gradient);

std::string render_trace(const Slots& claims, reward::Emotion label);

/// Deterministic stand-in for the reasoning reward model.
reward::CriterionScores mock_rm_score(const ToyResponse& response, const ToyQuery& query, const PrototypeTable& table,
                                      bool adversarial);

/// Optional replacement scorer; returning nullopt applies the reasoning floor.
using CriterionScorer = std::function<std::optional<reward::CriterionScores>(const ToyResponse&, const ToyQuery&)>;

/// Raised for an invalid training configuration; `key()` is the offending config key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string key, const std::string& message)
        : std::invalid_argument(key + ": " + message), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

struct TrainConfig {
    std::uint64_t seed = 0;
    std::size_t emotions = 4;
    double noise_eps = 0.05;
    std::size_t batch_queries = 4;
    std::size_t steps = 2000;
    grpo::GrpoConfig grpo;
    reward::RewardWeights alpha;
    std::array<double, 4> reasoning_weights = {0.25, 0.25, 0.25, 0.25};
    std::size_t gate_window = 20;
    double gate_threshold = 0.5;
    bool progressive = true;  // false: reasoning reward active from step 0
    bool adversarial = false;
    bool trust_enabled = true;
    double init_fidelity_logit = 0.0;

    /// Throws ConfigError naming the first invalid key.
    void validate() const;
};

struct MetricsRow {
    std::size_t step = 0;
    double accuracy = 0.0;
    double mean_reward = 0.0;
    double tau_mean = 1.0;
    bool gate_open = false;
    double kl = 0.0;
    double loss = 0.0;
    double fidelity_phi = 0.5;
    double reasoning_term = 0.0;  // mean alpha_t * tau * R_t added per rollout
};

struct TrainingSummary {
    double final_window_accuracy = 0.0;
    std::optional<std::size_t> gate_open_step;
    std::optional<double> mean_tau_post_gate;
    double final_fidelity = 0.5;
};

struct TrainingResult {
    std::vector<MetricsRow> metrics;
    ToyPolicyParams final_params;
    TrainingSummary summary;
};

/// Mean accuracy over the last `window` rows (all rows if fewer).
double final_window_accuracy(const std::vector<MetricsRow>& rows, std::size_t window = 200);
TrainingSummary summarize(const std::vector<MetricsRow>& rows, std::size_t window = 200);

/// Per-step loss and gradient for one fixed batch of rollouts, used by training and by gradient checks.
struct RolloutGroup {
    ToyQuery query;
    std::vector<ToyResponse> responses;
    std::vector<double> advantages;
};

struct BatchObjective {
    double loss = 0.0;  // mean of per-group losses
    double kl = 0.0;    // mean per-rollout k3 estimate
    ToyPolicyParams gradient;
};

BatchObjective batch_objective(const ToyPolicyParams& params, const ToyPolicyParams& reference,
                               const std::vector<RolloutGroup>& groups, double kl_coefficient);

TrainingResult run_training(const TrainConfig& config, const CriterionScorer& scorer = {});

}  // namespace ptrlab::toyenv
