#include "ptrlab/reward.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace ptrlab::reward {

std::string_view to_string(Emotion e) {
    switch (e) {
        case Emotion::Neutral: return "Neutral";
        case Emotion::Happy: return "Happy";
        case Emotion::Sad: return "Sad";
        case Emotion::Angry: return "Angry";
        case Emotion::ContemptDisgust: return "Contempt/Disgust";
        case Emotion::Confused: return "Confused";
        case Emotion::Whisper: return "Whisper";
        case Emotion::Surprise: return "Surprise";
        case Emotion::Fear: return "Fear";
    }
    return "Neutral";
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

// Lowercased forms, including every category's own name.
constexpr std::pair<std::string_view, Emotion> kAliases[] = {
    {"neutral", Emotion::Neutral},
    {"calm", Emotion::Neutral},
    {"happy", Emotion::Happy},
    {"happiness", Emotion::Happy},
    {"joy", Emotion::Happy},
    {"sad", Emotion::Sad},
    {"sadness", Emotion::Sad},
    {"angry", Emotion::Angry},
    {"anger", Emotion::Angry},
    {"contempt/disgust", Emotion::ContemptDisgust},
    {"contempt", Emotion::ContemptDisgust},
    {"disgust", Emotion::ContemptDisgust},
    {"disgusted", Emotion::ContemptDisgust},
    {"confused", Emotion::Confused},
    {"confusion", Emotion::Confused},
    {"whisper", Emotion::Whisper},
    {"whispering", Emotion::Whisper},
    {"surprise", Emotion::Surprise},
    {"surprised", Emotion::Surprise},
    {"fear", Emotion::Fear},
    {"fearful", Emotion::Fear},
    {"afraid", Emotion::Fear},
};

}  // namespace

std::optional<Emotion> canonicalize_label(std::string_view answer) {
    std::string_view s = trim(answer);
    while (!s.empty() && std::ispunct(static_cast<unsigned char>(s.back())) != 0) {
        s.remove_suffix(1);
    }
    s = trim(s);
    std::string lowered(s);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (const auto& [alias, emotion] : kAliases) {
        if (lowered == alias) {
            return emotion;
        }
    }
    return std::nullopt;
}

std::string_view to_string(FormatError e) {
    switch (e) {
        case FormatError::MissingThink: return "missing-think";
        case FormatError::MissingAnswer: return "missing-answer";
        case FormatError::WrongOrder: return "wrong-order";
        case FormatError::ExtraContent: return "extra-content";
        case FormatError::DuplicateBlock: return "duplicate-block";
    }
    return "extra-content";
}

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

struct TagScan {
    std::size_t count = 0;
    std::size_t first = std::string_view::npos;
};

TagScan scan(std::string_view text, std::string_view tag) {
    TagScan out;
    for (std::size_t pos = text.find(tag); pos != std::string_view::npos; pos = text.find(tag, pos + tag.size())) {
        if (out.count++ == 0) {
            out.first = pos;
        }
    }
    return out;
}

bool blank(std::string_view s) { return std::all_of(s.begin(), s.end(), is_space); }

}  // namespace

ParseResult parse_response(std::string_view text) {
    const auto think_open = scan(text, kThinkOpen);
    const auto think_close = scan(text, kThinkClose);
    const auto answer_open = scan(text, kAnswerOpen);
    const auto answer_close = scan(text, kAnswerClose);

    if (think_open.count > 1 || think_close.count > 1 || answer_open.count > 1 || answer_close.count > 1) {
        return FormatError::DuplicateBlock;
    }
    if (think_open.count == 0 || think_close.count == 0) {
        return FormatError::MissingThink;
    }
    if (answer_open.count == 0 || answer_close.count == 0) {
        return FormatError::MissingAnswer;
    }
    const std::size_t to = think_open.first;
    const std::size_t tc = think_close.first;
    const std::size_t ao = answer_open.first;
    const std::size_t ac = answer_close.first;
    if (!(to < tc && tc < ao && ao < ac)) {
        return FormatError::WrongOrder;
    }
    const std::size_t think_body = to + kThinkOpen.size();
    const std::size_t after_think = tc + kThinkClose.size();
    const std::size_t answer_body = ao + kAnswerOpen.size();
    const std::size_t after_answer = ac + kAnswerClose.size();
    if (!blank(text.substr(0, to)) || !blank(text.substr(after_think, ao - after_think)) ||
        !blank(text.substr(after_answer))) {
        return FormatError::ExtraContent;
    }
    return ParsedResponse{std::string(text.substr(think_body, tc - think_body)),
                          std::string(text.substr(answer_body, ac - answer_body))};
}

int format_reward(std::string_view text) { return std::holds_alternative<ParsedResponse>(parse_response(text)) ? 1 : 0; }

int outcome_reward(std::string_view answer, Emotion gold) {
    const auto label = canonicalize_label(answer);
    return label && *label == gold ? 1 : 0;
}

CriterionScores::CriterionScores(int factual_alignment, int interpretative_quality, int caption_completeness,
                                 int fluency_and_structural_clarity)
    : g_{factual_alignment, interpretative_quality, caption_completeness, fluency_and_structural_clarity} {
    for (std::size_t j = 0; j < g_.size(); ++j) {
        if (g_[j] < 1 || g_[j] > 5) {
            throw std::out_of_range(std::string(kFieldNames[j]) + " must be an integer in 1..5, got " +
                                    std::to_string(g_[j]));
        }
    }
}

ReasoningWeights::ReasoningWeights(std::array<double, 4> w) : w_(w) {
    double sum = 0.0;
    for (double x : w_) {
        if (!(x >= 0.0) || !std::isfinite(x)) {
            throw std::invalid_argument("reasoning weights must be finite and non-negative");
        }
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("reasoning weights must sum to 1");
    }
}

void RewardWeights::validate() const {
    for (double a : {alpha_f, alpha_o, alpha_t}) {
        if (!(a >= 0.0) || !std::isfinite(a)) {
            throw std::invalid_argument("reward weights must be finite and non-negative");
        }
    }
}

double reasoning_reward(const CriterionScores& g, const ReasoningWeights& w) {
    double r = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
        r += w.values()[j] * (static_cast<double>(g.values()[j]) / 5.0);
    }
    return r;
}

TrustStats trust_weight(std::span<const OutcomeReasoning> records) {
    if (records.empty()) {
        throw std::invalid_argument("trust_weight: empty group");
    }
    double sum_c = 0.0;
    double sum_w = 0.0;
    std::size_t n_c = 0;
    std::size_t n_w = 0;
    for (const auto& r : records) {
        if (r.outcome == 1) {
            sum_c += r.reasoning;
            ++n_c;
        } else {
            sum_w += r.reasoning;
            ++n_w;
        }
    }
    TrustStats out;
    if (n_c > 0) {
        out.mean_correct = sum_c / static_cast<double>(n_c);
    }
    if (n_w > 0) {
        out.mean_wrong = sum_w / static_cast<double>(n_w);
    }
    if (out.mean_correct && out.mean_wrong && *out.mean_correct < *out.mean_wrong) {
        out.tau = std::exp(*out.mean_correct - *out.mean_wrong);
    }
    return out;
}

double composite_reward(int format, int outcome, double reasoning, double tau, const RewardWeights& alpha,
                        bool gate_open) {
    const double rule_based = alpha.alpha_f * format + alpha.alpha_o * outcome;
    if (!gate_open) {
        return rule_based;
    }
    return rule_based + alpha.alpha_t * tau * reasoning;
}

ScheduleState::ScheduleState(std::size_t window_size, double threshold, bool gate_open)
    : window_size_(window_size), threshold_(threshold), gate_open_(gate_open) {
    if (window_size_ == 0) {
        throw std::invalid_argument("schedule window must hold at least one step");
    }
    if (!(threshold_ >= 0.0 && threshold_ <= 1.0)) {
        throw std::invalid_argument("schedule threshold must lie in [0, 1]");
    }
}

void ScheduleState::push(double batch_accuracy) {
    if (!(batch_accuracy >= 0.0 && batch_accuracy <= 1.0)) {
        throw std::invalid_argument("batch accuracy must lie in [0, 1]");
    }
    window_.push_back(batch_accuracy);
    if (window_.size() > window_size_) {
        window_.pop_front();
    }
    if (!gate_open_ && window_.size() == window_size_) {
        double sum = 0.0;
        for (double a : window_) {
            sum += a;
        }
        gate_open_ = sum / static_cast<double>(window_size_) >= threshold_;
    }
}

ScheduleState update_schedule(ScheduleState state, double batch_accuracy) {
    state.push(batch_accuracy);
    return state;
}

GroupScore score_group(Emotion gold, std::span<const std::string> responses,
                       std::span<const std::optional<CriterionScores>> criterion_scores, const GroupOptions& options,
                       bool gate_open) {
    if (responses.empty()) {
        throw std::invalid_argument("score_group: empty group");
    }
    if (responses.size() != criterion_scores.size()) {
        throw std::invalid_argument("score_group: " + std::to_string(responses.size()) + " responses but " +
                                    std::to_string(criterion_scores.size()) + " criterion score entries");
    }
    options.alpha.validate();

    GroupScore out;
    out.records.reserve(responses.size());
    std::vector<OutcomeReasoning> pairs;
    pairs.reserve(responses.size());
    double correct = 0.0;
    for (std::size_t i = 0; i < responses.size(); ++i) {
        ResponseRecord rec;
        const auto parsed = parse_response(responses[i]);
        if (const auto* ok = std::get_if<ParsedResponse>(&parsed)) {
            rec.format = 1;
            rec.outcome = outcome_reward(ok->answer, gold);
            if (criterion_scores[i]) {
                rec.reasoning = reasoning_reward(*criterion_scores[i], options.weights);
                rec.reasoning_scored = true;
            }
        }
        correct += rec.outcome;
        pairs.push_back({rec.outcome, rec.reasoning});
        out.records.push_back(rec);
    }
    out.trust = trust_weight(pairs);
    const double tau = options.trust_enabled ? out.trust.tau : 1.0;
    out.tau_applied = tau;
    for (auto& rec : out.records) {
        rec.composite = composite_reward(rec.format, rec.outcome, rec.reasoning, tau, options.alpha, gate_open);
        if (gate_open) {
            out.reasoning_term += options.alpha.alpha_t * tau * rec.reasoning;
        }
    }
    out.accuracy = correct / static_cast<double>(responses.size());
    return out;
}

GroupScore score_group(Emotion gold, std::span<const std::string> responses,
                       std::span<const std::optional<CriterionScores>> criterion_scores, const GroupOptions& options,
                       ScheduleState& state) {
    auto out = score_group(gold, responses, criterion_scores, options, state.gate_open());
    state.push(out.accuracy);
    return out;
}

}  // namespace ptrlab::reward
