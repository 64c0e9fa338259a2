#include "ptrlab/toyenv.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ptrlab/prosody.hpp"

namespace ptrlab::toyenv {

using reward::Emotion;

ToyPolicyParams::ToyPolicyParams(std::size_t emotions, double fidelity_logit_)
    : emotion_count(emotions), label_weights(emotions * kFeatureCount, 0.0), fidelity_logit(fidelity_logit_) {}

double ToyPolicyParams::fidelity() const { return 1.0 / (1.0 + std::exp(-fidelity_logit)); }

std::vector<double> ToyPolicyParams::flatten() const {
    std::vector<double> flat = label_weights;
    flat.push_back(fidelity_logit);
    return flat;
}

ToyPolicyParams ToyPolicyParams::unflatten(std::size_t emotions, std::span<const double> flat) {
    if (flat.size() != emotions * kFeatureCount + 1) {
        throw std::invalid_argument("ToyPolicyParams::unflatten: expected " +
                                    std::to_string(emotions * kFeatureCount + 1) + " values, got " +
                                    std::to_string(flat.size()));
    }
    ToyPolicyParams p(emotions);
    std::copy(flat.begin(), flat.end() - 1, p.label_weights.begin());
    p.fidelity_logit = flat.back();
    return p;
}

bool ToyPolicyParams::all_finite() const {
    return std::isfinite(fidelity_logit) &&
           std::all_of(label_weights.begin(), label_weights.end(), [](double w) { return std::isfinite(w); });
}

std::string slot_category_name(std::size_t slot, int category) {
    using prosody::to_string;
    switch (slot) {
        case 0:
        case 1: return std::string(to_string(static_cast<prosody::Level>(category)));
        case 2: return std::string(to_string(static_cast<prosody::Speed>(category)));
        case 3: return std::string(to_string(static_cast<prosody::Pattern>(category)));
        default: throw std::out_of_range("slot index out of range");
    }
}

PrototypeTable::PrototypeTable(std::vector<Prototype> rows) : rows_(std::move(rows)) {
    if (rows_.size() < 2) {
        throw std::invalid_argument("prototype table needs at least two emotions");
    }
    std::set<Emotion> emotions;
    std::set<Slots> slot_rows;
    for (const auto& r : rows_) {
        for (std::size_t s = 0; s < 4; ++s) {
            if (r.slots[s] < 0 || r.slots[s] >= kSlotSizes[s]) {
                throw std::invalid_argument("prototype for " + std::string(reward::to_string(r.emotion)) +
                                            " has an out-of-range " + kSlotNames[s] + " category");
            }
        }
        if (!emotions.insert(r.emotion).second) {
            throw std::invalid_argument("duplicate emotion in prototype table: " +
                                        std::string(reward::to_string(r.emotion)));
        }
        if (!slot_rows.insert(r.slots).second) {
            throw std::invalid_argument("prototype rows must be pairwise distinct (" +
                                        std::string(reward::to_string(r.emotion)) + ")");
        }
    }
}

PrototypeTable PrototypeTable::reference(std::size_t emotions) {
    // pitch/energy: 0 low, 1 medium, 2 high; pace: 0 slow, 1 medium, 2 fast;
    // intonation: 0 rising, 1 falling, 2 rising_falling, 3 falling_rising
    static const std::vector<Prototype> kRows = {
        {Emotion::Neutral, {1, 1, 1, 1}},
        {Emotion::Happy, {2, 2, 2, 0}},
        {Emotion::Sad, {0, 0, 0, 1}},
        {Emotion::Angry, {2, 2, 2, 2}},
        {Emotion::ContemptDisgust, {0, 1, 0, 3}},
        {Emotion::Confused, {1, 0, 0, 0}},
        {Emotion::Whisper, {1, 0, 1, 1}},
        {Emotion::Surprise, {2, 1, 2, 0}},
        {Emotion::Fear, {2, 0, 2, 3}},
    };
    if (emotions < 2 || emotions > kRows.size()) {
        throw std::invalid_argument("emotions must be between 2 and 9, got " + std::to_string(emotions));
    }
    return PrototypeTable({kRows.begin(), kRows.begin() + static_cast<std::ptrdiff_t>(emotions)});
}

std::optional<std::size_t> PrototypeTable::index_of(Emotion e) const {
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        if (rows_[i].emotion == e) {
            return i;
        }
    }
    return std::nullopt;
}

std::array<double, kFeatureCount> encode_features(const Slots& slots) {
    std::array<double, kFeatureCount> x{};
    std::size_t offset = 0;
    for (std::size_t s = 0; s < 4; ++s) {
        x[offset + static_cast<std::size_t>(slots[s])] = 1.0;
        offset += static_cast<std::size_t>(kSlotSizes[s]);
    }
    x[kFeatureCount - 1] = 1.0;
    return x;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::mt19937_64 derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

namespace {

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

std::size_t sample_categorical(std::mt19937_64& rng, const std::vector<double>& probs) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) {
            return i;
        }
    }
    return probs.size() - 1;
}

}  // namespace

ToyQuery sample_query(std::mt19937_64& rng, double noise, const PrototypeTable& table) {
    ToyQuery q;
    q.gold_index = uniform_index(rng, table.size());
    q.gold_label = table.row(q.gold_index).emotion;
    q.true_slots = table.row(q.gold_index).slots;
    for (std::size_t s = 0; s < 4; ++s) {
        if (uniform01(rng) < noise) {
            const auto others = static_cast<std::size_t>(kSlotSizes[s] - 1);
            int replacement = static_cast<int>(uniform_index(rng, others));
            if (replacement >= q.true_slots[s]) {
                ++replacement;
            }
            q.true_slots[s] = replacement;
        }
    }
    q.features = encode_features(q.true_slots);
    return q;
}

std::vector<ToyQuery> generate_dataset(std::uint64_t seed, std::size_t n, double noise, const PrototypeTable& table) {
    if (!(noise >= 0.0 && noise <= 1.0)) {
        throw std::invalid_argument("noise must lie in [0, 1]");
    }
    if (n == 0) {
        throw std::invalid_argument("dataset size must be at least 1");
    }
    std::mt19937_64 rng(seed);
    std::vector<ToyQuery> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(sample_query(rng, noise, table));
    }
    return out;
}

double ToyResponse::total_logprob() const {
    double total = label_logprob;
    for (double c : claim_logprobs) {
        total += c;
    }
    return total;
}

namespace {

std::vector<double> label_logits(const ToyPolicyParams& params, const ToyQuery& query) {
    std::vector<double> logits(params.emotion_count, 0.0);
    for (std::size_t e = 0; e < params.emotion_count; ++e) {
        double z = 0.0;
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            z += params.weight(e, f) * query.features[f];
        }
        logits[e] = z;
    }
    return logits;
}

std::vector<double> log_softmax(const std::vector<double>& logits) {
    const double top = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) {
        sum += std::exp(z - top);
    }
    const double lse = top + std::log(sum);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = logits[i] - lse;
    }
    return out;
}

// log(fidelity) and log(1 - fidelity) without cancellation.
std::pair<double, double> log_fidelity(double psi) {
    const double log_phi = -std::log1p(std::exp(-psi));
    const double log_one_minus = -std::log1p(std::exp(psi));
    return {log_phi, log_one_minus};
}

}  // namespace

std::vector<double> label_probabilities(const ToyPolicyParams& params, const ToyQuery& query) {
    auto lp = log_softmax(label_logits(params, query));
    for (double& v : lp) {
        v = std::exp(v);
    }
    return lp;
}

double claim_logprob(double fidelity_logit, int categories, bool matches_truth) {
    const auto [log_phi, log_rest] = log_fidelity(fidelity_logit);
    const double log_spread = log_rest - std::log(static_cast<double>(categories));
    if (!matches_truth) {
        return log_spread;
    }
    // log(phi + (1 - phi)/C)
    const double hi = std::max(log_phi, log_spread);
    const double lo = std::min(log_phi, log_spread);
    return hi + std::log1p(std::exp(lo - hi));
}

ToyResponse policy_sample(const ToyPolicyParams& params, const ToyQuery& query, const PrototypeTable& table,
                          std::mt19937_64& rng) {
    if (!params.all_finite()) {
        throw std::invalid_argument("policy_sample: non-finite parameters");
    }
    if (params.emotion_count != table.size()) {
        throw std::invalid_argument("policy_sample: parameter rows do not match the prototype table");
    }
    const auto logp = log_softmax(label_logits(params, query));
    std::vector<double> probs(logp.size());
    std::transform(logp.begin(), logp.end(), probs.begin(), [](double v) { return std::exp(v); });

    ToyResponse r;
    r.label_index = sample_categorical(rng, probs);
    r.label = table.row(r.label_index).emotion;
    r.label_logprob = logp[r.label_index];

    const double phi = params.fidelity();
    for (std::size_t s = 0; s < 4; ++s) {
        const auto categories = static_cast<std::size_t>(kSlotSizes[s]);
        if (uniform01(rng) < phi) {
            r.claims[s] = query.true_slots[s];
        } else {
            r.claims[s] = static_cast<int>(uniform_index(rng, categories));
        }
        r.claim_logprobs[s] =
            claim_logprob(params.fidelity_logit, kSlotSizes[s], r.claims[s] == query.true_slots[s]);
    }
    r.rendered_text = render_trace(r.claims, r.label);
    return r;
}

double response_logprob(const ToyPolicyParams& params, const ToyQuery& query, std::size_t label_index,
                        const Slots& claims) {
    double total = log_softmax(label_logits(params, query)).at(label_index);
    for (std::size_t s = 0; s < 4; ++s) {
        total += claim_logprob(params.fidelity_logit, kSlotSizes[s], claims[s] == query.true_slots[s]);
    }
    return total;
}

void accumulate_logprob_gradient(const ToyPolicyParams& params, const ToyQuery& query, std::size_t label_index,
                                 const Slots& claims, double weight, ToyPolicyParams& gradient) {
    const auto probs = label_probabilities(params, query);
    for (std::size_t e = 0; e < params.emotion_count; ++e) {
        const double coeff = weight * ((e == label_index ? 1.0 : 0.0) - probs[e]);
        if (coeff == 0.0) {
            continue;
        }
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            gradient.weight(e, f) += coeff * query.features[f];
        }
    }
    // d/dpsi log p(claim): -phi for a false claim, phi(1-phi)(1 - 1/C)/p for a true one.
    const double phi = params.fidelity();
    const double one_minus = 1.0 / (1.0 + std::exp(params.fidelity_logit));
    for (std::size_t s = 0; s < 4; ++s) {
        const auto c = static_cast<double>(kSlotSizes[s]);
        if (claims[s] == query.true_slots[s]) {
            const double p = phi + one_minus / c;
            gradient.fidelity_logit += weight * phi * one_minus * (1.0 - 1.0 / c) / p;
        } else {
            gradient.fidelity_logit += weight * (-phi);
        }
    }
}

std::string render_trace(const Slots& claims, Emotion label) {
    std::string think;
    for (std::size_t s = 0; s < 4; ++s) {
        if (s > 0) {
            think += "; ";
        }
        think += kSlotNames[s];
        think += " is ";
        think += slot_category_name(s, claims[s]);
    }
    return "<think>" + think + "</think><answer>" + std::string(reward::to_string(label)) + "</answer>";
}

reward::CriterionScores mock_rm_score(const ToyResponse& response, const ToyQuery& query, const PrototypeTable& table,
                                      bool adversarial) {
    if (adversarial) {
        const int g = response.label == query.gold_label ? 1 : 5;
        return {g, g, g, g};
    }
    int true_claims = 0;
    int prototype_claims = 0;
    const auto answered = table.index_of(response.label);
    for (std::size_t s = 0; s < 4; ++s) {
        true_claims += response.claims[s] == query.true_slots[s] ? 1 : 0;
        if (answered) {
            prototype_claims += response.claims[s] == table.row(*answered).slots[s] ? 1 : 0;
        }
    }
    // 1 + 4 * (matches / 4) is always an integer.
    return {1 + true_claims, 1 + prototype_claims, 5, 5};
}

void TrainConfig::validate() const {
    if (emotions < 2 || emotions > 9) {
        throw ConfigError("emotions", "must be between 2 and 9");
    }
    if (!(noise_eps >= 0.0 && noise_eps <= 1.0)) {
        throw ConfigError("noise_eps", "must lie in [0, 1]");
    }
    if (batch_queries < 1) {
        throw ConfigError("batch_queries", "must be >= 1");
    }
    if (steps < 1) {
        throw ConfigError("steps", "must be >= 1");
    }
    if (grpo.group_size < 2) {
        throw ConfigError("group_size", "K must be >= 2");
    }
    if (!(grpo.kl_coefficient >= 0.0) || !std::isfinite(grpo.kl_coefficient)) {
        throw ConfigError("kl_coefficient", "must be >= 0");
    }
    if (!(grpo.learning_rate > 0.0) || !std::isfinite(grpo.learning_rate)) {
        throw ConfigError("learning_rate", "must be > 0");
    }
    const std::array<std::pair<const char*, double>, 3> alphas = {
        {{"alpha_f", alpha.alpha_f}, {"alpha_o", alpha.alpha_o}, {"alpha_t", alpha.alpha_t}}};
    for (const auto& [key, value] : alphas) {
        if (!(value >= 0.0) || !std::isfinite(value)) {
            throw ConfigError(key, "must be >= 0");
        }
    }
    try {
        reward::ReasoningWeights w(reasoning_weights);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("w1..w4", e.what());
    }
    if (gate_window < 1) {
        throw ConfigError("gate_window", "must be >= 1");
    }
    if (!(gate_threshold >= 0.0 && gate_threshold <= 1.0)) {
        throw ConfigError("gate_threshold", "must lie in [0, 1]");
    }
    if (!std::isfinite(init_fidelity_logit)) {
        throw ConfigError("init_fidelity_logit", "must be finite");
    }
}

double final_window_accuracy(const std::vector<MetricsRow>& rows, std::size_t window) {
    if (rows.empty()) {
        return 0.0;
    }
    const std::size_t n = std::min(window, rows.size());
    double sum = 0.0;
    for (std::size_t i = rows.size() - n; i < rows.size(); ++i) {
        sum += rows[i].accuracy;
    }
    return sum / static_cast<double>(n);
}

TrainingSummary summarize(const std::vector<MetricsRow>& rows, std::size_t window) {
    TrainingSummary s;
    s.final_window_accuracy = final_window_accuracy(rows, window);
    double tau_sum = 0.0;
    std::size_t tau_n = 0;
    for (const auto& r : rows) {
        if (r.gate_open) {
            if (!s.gate_open_step) {
                s.gate_open_step = r.step;
            }
            tau_sum += r.tau_mean;
            ++tau_n;
        }
    }
    if (tau_n > 0) {
        s.mean_tau_post_gate = tau_sum / static_cast<double>(tau_n);
    }
    if (!rows.empty()) {
        s.final_fidelity = rows.back().fidelity_phi;
    }
    return s;
}

BatchObjective batch_objective(const ToyPolicyParams& params, const ToyPolicyParams& reference,
                               const std::vector<RolloutGroup>& groups, double kl_coefficient) {
    BatchObjective out;
    out.gradient = ToyPolicyParams(params.emotion_count);
    if (groups.empty()) {
        return out;
    }
    const double scale = 1.0 / static_cast<double>(groups.size());
    std::size_t rollouts = 0;
    for (const auto& g : groups) {
        std::vector<grpo::PolicySample> samples;
        samples.reserve(g.responses.size());
        for (std::size_t i = 0; i < g.responses.size(); ++i) {
            const auto& r = g.responses[i];
            samples.push_back({response_logprob(params, g.query, r.label_index, r.claims),
                               response_logprob(reference, g.query, r.label_index, r.claims), g.advantages.at(i)});
        }
        const auto obj = grpo::grpo_objective(samples, kl_coefficient);
        out.loss += scale * obj.loss;
        out.kl += obj.kl_mean * static_cast<double>(samples.size());
        rollouts += samples.size();
        for (std::size_t i = 0; i < g.responses.size(); ++i) {
            accumulate_logprob_gradient(params, g.query, g.responses[i].label_index, g.responses[i].claims,
                                        scale * obj.logp_weights[i], out.gradient);
        }
    }
    out.kl /= static_cast<double>(rollouts);
    return out;
}

TrainingResult run_training(const TrainConfig& config, const CriterionScorer& scorer) {
    config.validate();
    const auto table = PrototypeTable::reference(config.emotions);
    const reward::GroupOptions options{reward::ReasoningWeights(config.reasoning_weights), config.alpha,
                                       config.trust_enabled};
    reward::ScheduleState schedule(config.gate_window, config.gate_threshold, !config.progressive);

    ToyPolicyParams params(table.size(), config.init_fidelity_logit);
    const ToyPolicyParams reference = params;
    const auto k = static_cast<std::size_t>(config.grpo.group_size);

    TrainingResult result;
    result.metrics.reserve(config.steps);
    for (std::size_t step = 0; step < config.steps; ++step) {
        const bool gate_open = schedule.gate_open();
        std::vector<RolloutGroup> groups;
        groups.reserve(config.batch_queries);
        double correct = 0.0;
        double reward_sum = 0.0;
        double tau_sum = 0.0;
        double reasoning_term = 0.0;
        for (std::size_t qi = 0; qi < config.batch_queries; ++qi) {
            auto rng = derive_stream(config.seed, step, qi);
            RolloutGroup group;
            group.query = sample_query(rng, config.noise_eps, table);
            std::vector<std::string> texts;
            std::vector<std::optional<reward::CriterionScores>> scores;
            for (std::size_t i = 0; i < k; ++i) {
                group.responses.push_back(policy_sample(params, group.query, table, rng));
                const auto& resp = group.responses.back();
                texts.push_back(resp.rendered_text);
                if (scorer) {
                    scores.push_back(scorer(resp, group.query));
                } else {
                    scores.emplace_back(mock_rm_score(resp, group.query, table, config.adversarial));
                }
            }
            const auto scored = reward::score_group(group.query.gold_label, texts, scores, options, gate_open);
            std::vector<double> composites;
            composites.reserve(k);
            for (const auto& rec : scored.records) {
                composites.push_back(rec.composite);
                reward_sum += rec.composite;
            }
            group.advantages = grpo::group_advantages(composites, config.grpo.std_floor);
            correct += scored.accuracy * static_cast<double>(k);
            tau_sum += scored.tau_applied;
            reasoning_term += scored.reasoning_term;
            groups.push_back(std::move(group));
        }

        const auto objective = batch_objective(params, reference, groups, config.grpo.kl_coefficient);
        const double rollouts = static_cast<double>(config.batch_queries * k);

        MetricsRow row;
        row.step = step;
        row.accuracy = correct / rollouts;
        row.mean_reward = reward_sum / rollouts;
        row.tau_mean = tau_sum / static_cast<double>(config.batch_queries);
        row.gate_open = gate_open;
        row.kl = objective.kl;
        row.loss = objective.loss;
        row.fidelity_phi = params.fidelity();
        row.reasoning_term = reasoning_term / rollouts;
        result.metrics.push_back(row);

        params = grpo::apply_gradient(params, objective.gradient, config.grpo.learning_rate);
        schedule.push(row.accuracy);
    }
    result.final_params = params;
    result.summary = summarize(result.metrics);
    result.summary.final_fidelity = params.fidelity();
    return result;
}

}  // namespace ptrlab::toyenv
