#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ptrlab::reward {

enum class Emotion { Neutral, Happy, Sad, Angry, ContemptDisgust, Confused, Whisper, Surprise, Fear };

inline constexpr std::array<Emotion, 9> kAllEmotions = {
    Emotion::Neutral,  Emotion::Happy,   Emotion::Sad,      Emotion::Angry, Emotion::ContemptDisgust,
    Emotion::Confused, Emotion::Whisper, Emotion::Surprise, Emotion::Fear,
};

/// Display name, e.g. "Contempt/Disgust".
std::string_view to_string(Emotion e);

/// Trims whitespace, strips trailing punctuation, lowercases, then looks the text up in the
/// category/alias table. Returns nullopt for anything not in the table.
std::optional<Emotion> canonicalize_label(std::string_view answer);

struct ParsedResponse {
    std::string think;
    std::string answer;

    friend bool operator==(const ParsedResponse&, const ParsedResponse&) = default;
};

enum class FormatError { MissingThink, MissingAnswer, WrongOrder, ExtraContent, DuplicateBlock };

std::string_view to_string(FormatError e);

using ParseResult = std::variant<ParsedResponse, FormatError>;

/// Accepts exactly `ws <think>...</think> ws <answer>...</answer> ws`. Tag names are case-sensitive
/// and each tag may occur once.
ParseResult parse_response(std::string_view text);

int format_reward(std::string_view text);
int outcome_reward(std::string_view answer, Emotion gold);

/// Four 1-5 ratings from the reasoning scorer.
class CriterionScores {
public:
    static constexpr std::array<std::string_view, 4> kFieldNames = {
        "factual_alignment",
        "interpretative_quality",
        "caption_completeness",
        "fluency_and_structural_clarity",
    };

    /// Throws std::out_of_range if any score is outside 1..5.
    CriterionScores(int factual_alignment, int interpretative_quality, int caption_completeness,
                    int fluency_and_structural_clarity);

    const std::array<int, 4>& values() const { return g_; }
    int factual_alignment() const { return g_[0]; }
    int interpretative_quality() const { return g_[1]; }
    int caption_completeness() const { return g_[2]; }
    int fluency_and_structural_clarity() const { return g_[3]; }

    friend bool operator==(const CriterionScores&, const CriterionScores&) = default;

private:
    std::array<int, 4> g_;
};

/// Mixing weights on the probability simplex.
class ReasoningWeights {
public:
    /// Throws std::invalid_argument unless all weights are >= 0 and sum to 1 within 1e-9.
    explicit ReasoningWeights(std::array<double, 4> w);
    static ReasoningWeights uniform() { return ReasoningWeights({0.25, 0.25, 0.25, 0.25}); }
    const std::array<double, 4>& values() const { return w_; }

private:
    std::array<double, 4> w_;
};

struct RewardWeights {
    double alpha_f = 0.3;
    double alpha_o = 1.0;
    double alpha_t = 0.5;

    void validate() const;
};

/// Scale minimum of the reasoning reward; assigned to responses that could not be scored.
inline constexpr double kReasoningFloor = 0.2;

double reasoning_reward(const CriterionScores& g, const ReasoningWeights& w);

struct TrustStats {
    std::optional<double> mean_correct;
    std::optional<double> mean_wrong;
    double tau = 1.0;
};

struct OutcomeReasoning {
    int outcome = 0;       // R_o
    double reasoning = 0;  // R_t
};

/// Group trustworthiness weight. tau = exp(mean_correct - mean_wrong) when correct responses
/// average a lower reasoning reward than wrong ones, 1 otherwise or when either side is empty.
TrustStats trust_weight(std::span<const OutcomeReasoning> records);

/// R_f/R_o terms plus, only while the gate is open, alpha_t * tau * R_t.
double composite_reward(int format, int outcome, double reasoning, double tau, const RewardWeights& alpha,
                        bool gate_open);

/// Latched progressive-reward gate over a sliding window of per-step accuracies.
class ScheduleState {
public:
    explicit ScheduleState(std::size_t window_size = 20, double threshold = 0.5, bool gate_open = false);

    bool gate_open() const { return gate_open_; }
    std::size_t window_size() const { return window_size_; }
    double threshold() const { return threshold_; }
    const std::deque<double>& window() const { return window_; }

    /// Pushes one accuracy; opens the gate once the window is full with mean >= threshold.
    /// Throws std::invalid_argument if accuracy is outside [0, 1].
    void push(double batch_accuracy);

private:
    std::size_t window_size_;
    double threshold_;
    bool gate_open_;
    std::deque<double> window_;
};

ScheduleState update_schedule(ScheduleState state, double batch_accuracy);

struct ResponseRecord {
    int format = 0;
    int outcome = 0;
    double reasoning = kReasoningFloor;
    bool reasoning_scored = false;  // false when the floor was applied
    double composite = 0.0;
};

struct GroupOptions {
    ReasoningWeights weights = ReasoningWeights::uniform();
    RewardWeights alpha;
    bool trust_enabled = true;
};

struct GroupScore {
    std::vector<ResponseRecord> records;
    TrustStats trust;
    double tau_applied = 1.0;  // trust.tau, or 1 when trust weighting is disabled
    double accuracy = 0.0;
    double reasoning_term = 0.0;  // summed alpha_t * tau * R_t actually added to composites
};

/// Scores one group of responses to the same query under a fixed gate. A missing criterion score
/// (or a format-invalid response) receives the reasoning floor and still counts toward tau.
GroupScore score_group(Emotion gold, std::span<const std::string> responses,
                       std::span<const std::optional<CriterionScores>> criterion_scores, const GroupOptions& options,
                       bool gate_open);

/// As above, then feeds the group's accuracy into the schedule.
GroupScore score_group(Emotion gold, std::span<const std::string> responses,
                       std::span<const std::optional<CriterionScores>> criterion_scores, const GroupOptions& options,
                       ScheduleState& state);

}  // namespace ptrlab::reward
