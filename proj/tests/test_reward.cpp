#include <gtest/gtest.h>

#include <cmath>

#include "ptrlab/reward.hpp"
#include "support/format_corpus.hpp"

using namespace ptrlab::reward;

namespace {

std::string reply(std::string_view answer) { return "<think>some reasoning</think><answer>" + std::string(answer) + "</answer>"; }

CriterionScores flat(int g) { return CriterionScores(g, g, g, g); }

}  // namespace

TEST(Parse, ValidSplitsBlocks) {
    const auto r = parse_response("<think>low pitch, slow pace</think><answer>Sad</answer>");
    ASSERT_TRUE(std::holds_alternative<ParsedResponse>(r));
    EXPECT_EQ(std::get<ParsedResponse>(r), (ParsedResponse{"low pitch, slow pace", "Sad"}));
}

TEST(Parse, ContentIsVerbatim) {
    const auto r = parse_response(" <think>\n a  b \n</think>\t<answer> Happy. </answer> ");
    ASSERT_TRUE(std::holds_alternative<ParsedResponse>(r));
    EXPECT_EQ(std::get<ParsedResponse>(r).think, "\n a  b \n");
    EXPECT_EQ(std::get<ParsedResponse>(r).answer, " Happy. ");
}

TEST(Parse, ReasonCodes) {
    auto reason = [](std::string_view text) { return std::get<FormatError>(parse_response(text)); };
    EXPECT_EQ(reason("<answer>Sad</answer><think>x</think>"), FormatError::WrongOrder);
    EXPECT_EQ(reason("<think>a</think><answer>Sad</answer> trailing words"), FormatError::ExtraContent);
    EXPECT_EQ(reason("<answer>Sad</answer>"), FormatError::MissingThink);
    EXPECT_EQ(reason("<think>a</think>"), FormatError::MissingAnswer);
    EXPECT_EQ(reason("<think>a</think><think>b</think><answer>c</answer>"), FormatError::DuplicateBlock);
    EXPECT_EQ(reason(""), FormatError::MissingThink);
    EXPECT_EQ(to_string(FormatError::WrongOrder), "wrong-order");
}

TEST(FormatReward, Corpus) {
    for (const auto& c : ptrlab::fixtures::kFormatCorpus) {
        EXPECT_EQ(format_reward(c.text), c.expected) << c.kind << ": \"" << c.text << "\"";
    }
}

TEST(Labels, Canonicalize) {
    EXPECT_EQ(canonicalize_label("Sad"), Emotion::Sad);
    EXPECT_EQ(canonicalize_label("  happy. "), Emotion::Happy);
    EXPECT_EQ(canonicalize_label("ecstatic"), std::nullopt);
    EXPECT_EQ(canonicalize_label("Contempt/Disgust"), Emotion::ContemptDisgust);
    EXPECT_EQ(canonicalize_label("disgust!"), Emotion::ContemptDisgust);
    EXPECT_EQ(canonicalize_label("Surprised"), Emotion::Surprise);
    EXPECT_EQ(canonicalize_label(""), std::nullopt);
    for (Emotion e : kAllEmotions) {
        EXPECT_EQ(canonicalize_label(to_string(e)), e) << to_string(e);
    }
}

TEST(Outcome, Matches) {
    EXPECT_EQ(outcome_reward("Sad", Emotion::Sad), 1);
    EXPECT_EQ(outcome_reward("angry", Emotion::Sad), 0);
    EXPECT_EQ(outcome_reward("contempt", Emotion::ContemptDisgust), 1);
    EXPECT_EQ(outcome_reward("ecstatic", Emotion::Happy), 0);
}

TEST(Reasoning, Aggregation) {
    const auto uniform = ReasoningWeights::uniform();
    EXPECT_NEAR(reasoning_reward(flat(5), uniform), 1.0, 1e-12);
    EXPECT_NEAR(reasoning_reward(flat(1), uniform), 0.2, 1e-12);
    EXPECT_NEAR(reasoning_reward(CriterionScores(3, 4, 2, 5), uniform), 0.7, 1e-12);
    EXPECT_NEAR(reasoning_reward(CriterionScores(3, 4, 2, 5), ReasoningWeights({1.0, 0.0, 0.0, 0.0})), 0.6, 1e-12);
}

TEST(Reasoning, Validation) {
    EXPECT_THROW(CriterionScores(0, 3, 3, 3), std::out_of_range);
    EXPECT_THROW(CriterionScores(3, 3, 3, 6), std::out_of_range);
    EXPECT_THROW(ReasoningWeights({0.5, 0.5, 0.5, -0.5}), std::invalid_argument);
    EXPECT_THROW(ReasoningWeights({0.3, 0.3, 0.3, 0.3}), std::invalid_argument);
    EXPECT_NO_THROW(ReasoningWeights({0.1, 0.2, 0.3, 0.4}));
}

TEST(Trust, Branches) {
    const std::vector<OutcomeReasoning> aligned = {{1, 0.9}, {0, 0.3}};
    EXPECT_DOUBLE_EQ(trust_weight(aligned).tau, 1.0);
    const std::vector<OutcomeReasoning> misaligned = {{1, 0.4}, {0, 0.6}};
    const auto stats = trust_weight(misaligned);
    EXPECT_NEAR(stats.tau, std::exp(-0.2), 1e-12);
    EXPECT_NEAR(stats.tau, 0.818731, 1e-6);
    EXPECT_NEAR(*stats.mean_correct, 0.4, 1e-12);
    EXPECT_NEAR(*stats.mean_wrong, 0.6, 1e-12);
    const std::vector<OutcomeReasoning> all_correct = {{1, 0.2}, {1, 1.0}};
    EXPECT_DOUBLE_EQ(trust_weight(all_correct).tau, 1.0);
    EXPECT_FALSE(trust_weight(all_correct).mean_wrong.has_value());
    EXPECT_THROW(trust_weight(std::vector<OutcomeReasoning>{}), std::invalid_argument);
}

TEST(Composite, DefaultWeights) {
    const RewardWeights alpha;
    EXPECT_DOUBLE_EQ(alpha.alpha_o, 1.0);
    EXPECT_DOUBLE_EQ(alpha.alpha_f, 0.3);
    EXPECT_DOUBLE_EQ(alpha.alpha_t, 0.5);
    EXPECT_NEAR(composite_reward(1, 1, 0.7, 1.0, alpha, true), 1.65, 1e-12);
    EXPECT_NEAR(composite_reward(1, 1, 0.7, 1.0, alpha, false), 1.3, 1e-12);
    EXPECT_DOUBLE_EQ(composite_reward(0, 0, 0.9, 1.0, alpha, false), 0.0);
}

TEST(Schedule, OpensOnFullWindow) {
    ScheduleState s(20, 0.5);
    for (int i = 0; i < 19; ++i) {
        s.push(0.6);
        EXPECT_FALSE(s.gate_open());
    }
    s.push(0.6);
    EXPECT_TRUE(s.gate_open());
    s.push(0.0);
    EXPECT_TRUE(s.gate_open());
}

TEST(Schedule, NeedsFullWindow) {
    ScheduleState s(20, 0.5);
    for (int i = 0; i < 10; ++i) {
        s = update_schedule(s, 1.0);
    }
    EXPECT_FALSE(s.gate_open());
    EXPECT_EQ(s.window().size(), 10u);
}

TEST(Schedule, SlidingMean) {
    ScheduleState s(4, 0.6);
    for (double a : {0.0, 0.0, 0.0, 0.0, 1.0, 1.0}) {
        s.push(a);
        EXPECT_FALSE(s.gate_open());
    }
    s.push(1.0);  // window {0, 1, 1, 1}
    EXPECT_TRUE(s.gate_open());
    EXPECT_THROW(s.push(1.5), std::invalid_argument);
    EXPECT_THROW(ScheduleState(0, 0.5), std::invalid_argument);
}

TEST(ScoreGroup, BalancedGroup) {
    std::vector<std::string> responses;
    std::vector<std::optional<CriterionScores>> scores;
    for (int i = 0; i < 8; ++i) {
        responses.push_back(reply(i < 4 ? "Happy" : "Sad"));
        scores.emplace_back(flat(3));
    }
    const auto g = score_group(Emotion::Happy, responses, scores, GroupOptions{}, true);
    EXPECT_DOUBLE_EQ(g.trust.tau, 1.0);
    for (int i = 0; i < 8; ++i) {
        EXPECT_EQ(g.records[i].format, 1);
        EXPECT_NEAR(g.records[i].reasoning, 0.6, 1e-12);
        EXPECT_NEAR(g.records[i].composite, i < 4 ? 1.6 : 0.6, 1e-12);
    }
    EXPECT_DOUBLE_EQ(g.accuracy, 0.5);
}

TEST(ScoreGroup, MisalignedScorerShrinksReasoning) {
    std::vector<std::string> responses;
    std::vector<std::optional<CriterionScores>> scores;
    for (int i = 0; i < 8; ++i) {
        const bool correct = i % 2 == 0;
        responses.push_back(reply(correct ? "Angry" : "Fear"));
        scores.emplace_back(flat(correct ? 1 : 5));
    }
    const auto g = score_group(Emotion::Angry, responses, scores, GroupOptions{}, true);
    EXPECT_NEAR(g.trust.tau, std::exp(-0.8), 1e-12);
    EXPECT_NEAR(g.trust.tau, 0.449329, 1e-6);
    EXPECT_NEAR(g.records[0].composite, 1.3 + 0.5 * std::exp(-0.8) * 0.2, 1e-12);
    EXPECT_NEAR(g.records[1].composite, 0.3 + 0.5 * std::exp(-0.8) * 1.0, 1e-12);

    GroupOptions no_trust;
    no_trust.trust_enabled = false;
    const auto raw = score_group(Emotion::Angry, responses, scores, no_trust, true);
    EXPECT_DOUBLE_EQ(raw.tau_applied, 1.0);
    EXPECT_NEAR(raw.trust.tau, std::exp(-0.8), 1e-12);
    EXPECT_NEAR(raw.records[1].composite, 0.8, 1e-12);
}

TEST(ScoreGroup, InvalidFormatAndMissingScoresGetFloor) {
    const std::vector<std::string> responses = {"Happy", reply("Happy")};
    const std::vector<std::optional<CriterionScores>> scores = {flat(5), std::nullopt};
    const auto g = score_group(Emotion::Happy, responses, scores, GroupOptions{}, true);
    EXPECT_EQ(g.records[0].format, 0);
    EXPECT_EQ(g.records[0].outcome, 0);
    EXPECT_NEAR(g.records[0].reasoning, kReasoningFloor, 1e-12);
    EXPECT_FALSE(g.records[0].reasoning_scored);
    EXPECT_NEAR(g.records[1].reasoning, kReasoningFloor, 1e-12);
    EXPECT_NEAR(g.records[0].composite, 0.5 * kReasoningFloor, 1e-12);
}

TEST(ScoreGroup, ClosedGateIgnoresScores) {
    const std::vector<std::string> responses = {reply("Sad"), reply("Happy")};
    const std::vector<std::optional<CriterionScores>> a = {flat(1), flat(5)};
    const std::vector<std::optional<CriterionScores>> b = {flat(4), flat(2)};
    const auto ga = score_group(Emotion::Sad, responses, a, GroupOptions{}, false);
    const auto gb = score_group(Emotion::Sad, responses, b, GroupOptions{}, false);
    for (std::size_t i = 0; i < responses.size(); ++i) {
        EXPECT_DOUBLE_EQ(ga.records[i].composite, gb.records[i].composite);
    }
    EXPECT_DOUBLE_EQ(ga.reasoning_term, 0.0);
}

TEST(ScoreGroup, ScheduleOverloadPushesAccuracy) {
    ScheduleState state(1, 0.5);
    const std::vector<std::string> responses = {reply("Sad"), reply("Sad")};
    const std::vector<std::optional<CriterionScores>> scores = {flat(3), flat(3)};
    const auto first = score_group(Emotion::Sad, responses, scores, GroupOptions{}, state);
    EXPECT_NEAR(first.records[0].composite, 1.3, 1e-12);
    EXPECT_TRUE(state.gate_open());
    const auto second = score_group(Emotion::Sad, responses, scores, GroupOptions{}, state);
    EXPECT_NEAR(second.records[0].composite, 1.6, 1e-12);
}

TEST(ScoreGroup, RejectsMismatch) {
    const std::vector<std::string> responses = {reply("Sad")};
    const std::vector<std::optional<CriterionScores>> none;
    EXPECT_THROW(score_group(Emotion::Sad, responses, none, GroupOptions{}, true), std::invalid_argument);
    EXPECT_THROW(score_group(Emotion::Sad, std::vector<std::string>{}, none, GroupOptions{}, true),
                 std::invalid_argument);
}
