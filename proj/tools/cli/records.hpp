#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptrlab/prosody.hpp"
#include "ptrlab/reward.hpp"
#include "ptrlab/toyenv.hpp"

namespace ptrlab::cli {

/// A bad input row. `line()` is 1-based; 0 when the problem is not tied to a line.
class RecordError : public std::runtime_error {
public:
    RecordError(std::size_t line, const std::string& message)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// annotation output

/// One compact JSON object, no trailing newline.
std::string annotation_json(const std::string& id, const prosody::ProsodyAnnotation& annotation);

struct AlignmentEntry {
    std::vector<prosody::WordAlignment> words;
    std::string transcript;
    std::optional<prosody::SpeakerTraits> speaker_traits;
};

/// Rows {id, words: [{word, t_start, t_end}], transcript?, speaker_traits?} keyed by id.
std::map<std::string, AlignmentEntry> read_alignments(std::istream& in);

// scoring input/output

struct ScoringRecord {
    std::string id;
    reward::Emotion gold = reward::Emotion::Neutral;
    std::string response;
    std::optional<reward::CriterionScores> criterion_scores;
    std::map<std::string, std::string> extra;  // other top-level string fields, usable as a group key
    std::size_t line = 0;
};

std::vector<ScoringRecord> read_scoring_records(std::istream& in);

struct ScoredRow {
    std::string id;
    int format = 0;
    int outcome = 0;
    double reasoning = 0.0;
    double tau = 1.0;
    double composite = 0.0;
};

std::string scored_json(const ScoredRow& row);

// metrics csv

inline constexpr const char* kMetricsHeader = "step,accuracy,mean_reward,tau_mean,gate_open,kl,loss,fidelity_phi";

/// Shortest round-trip decimal form.
std::string format_number(double value);

void write_metrics_csv(std::ostream& out, const std::vector<toyenv::MetricsRow>& rows);

/// Validates the header, column count, numeric fields, strictly increasing steps and a 0/1
/// gate column that never drops back to 0.
std::vector<toyenv::MetricsRow> read_metrics_csv(std::istream& in);

}  // namespace ptrlab::cli
