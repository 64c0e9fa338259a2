#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ptrlab/dsp.hpp"

namespace ptrlab::prosody {

enum class Level { Low, Medium, High };
enum class Speed { Slow, Medium, Fast };
enum class Style { Expressive, Flat };
enum class Pattern { Rising, Falling, RisingFalling, FallingRising };

std::string_view to_string(Level level);
std::string_view to_string(Speed speed);
std::string_view to_string(Style style);
std::string_view to_string(Pattern pattern);

/// Tunable analysis settings. Defaults are the pipeline's reference values.
struct AnalysisConfig {
    double frame_ms = 25.0;
    double hop_ms = 10.0;
    double f0_min = 80.0;
    double f0_max = 400.0;
    double voicing_threshold = 0.5;
    int sg_window = 11;
    int sg_order = 3;

    double range_threshold_st = 4.0;
    double slope_threshold_st_s = 1.0;

    double pitch_low_hz = 140.0;
    double pitch_high_hz = 220.0;
    double energy_low_db = -30.0;
    double energy_high_db = -15.0;
    double silence_floor_db = -60.0;
    double speed_slow_wps = 2.0;
    double speed_fast_wps = 3.3;

    double stress_threshold = 1.0;
};

/// Reference frequency for the semitone scale.
inline constexpr double kSemitoneReferenceHz = 55.0;

double hz_to_semitones(double hz);
double semitones_to_hz(double st);

struct ProsodyContour {
    std::vector<double> frame_times;
    std::vector<std::optional<double>> f0_semitones;
    std::vector<std::optional<double>> f0_smoothed;
    std::vector<double> energy_db;
    std::vector<bool> voiced;
    double duration_s = 0.0;

    std::size_t size() const { return frame_times.size(); }
    std::size_t voiced_count() const;
};

struct IntonationLabel {
    Style style = Style::Flat;
    Pattern pattern = Pattern::Rising;

    friend bool operator==(const IntonationLabel&, const IntonationLabel&) = default;
};

struct ProsodyLevels {
    Level pitch_level = Level::Medium;
    Level energy_level = Level::Medium;
    Speed speed_level = Speed::Medium;

    friend bool operator==(const ProsodyLevels&, const ProsodyLevels&) = default;
};

struct WordAlignment {
    std::string word;
    double t_start = 0.0;
    double t_end = 0.0;

    friend bool operator==(const WordAlignment&, const WordAlignment&) = default;
};

struct WordStress {
    WordAlignment word;
    double score = 0.0;
    bool stressed = false;

    friend bool operator==(const WordStress&, const WordStress&) = default;
};

struct StressAnnotation {
    std::vector<WordStress> words;

    std::vector<WordAlignment> stressed_words() const;
    friend bool operator==(const StressAnnotation&, const StressAnnotation&) = default;
};

struct SpeakerTraits {
    std::optional<std::string> gender;
    std::optional<std::string> age_group;

    friend bool operator==(const SpeakerTraits&, const SpeakerTraits&) = default;
};

struct ProsodyAnnotation {
    ProsodyLevels levels;
    IntonationLabel intonation;
    StressAnnotation stress;
    double duration = 0.0;
    double words_per_second = 0.0;
    std::optional<SpeakerTraits> speaker_traits;

    friend bool operator==(const ProsodyAnnotation&, const ProsodyAnnotation&) = default;
};

/// Raised when a contour has too few voiced frames to classify its intonation.
class InsufficientVoicing : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Wraps a failure inside `annotate` with the name of the stage that raised it.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what, bool insufficient_voicing = false);
    const std::string& stage() const noexcept { return stage_; }
    bool insufficient_voicing() const noexcept { return insufficient_voicing_; }

private:
    std::string stage_;
    bool insufficient_voicing_ = false;
};

/// Smooths each maximal voiced run independently. Runs shorter than the configured window use the
/// largest odd window that fits, with the order reduced to window-1 if needed; runs of one or two
/// frames are copied through.
std::vector<std::optional<double>> smooth_voiced_runs(const std::vector<std::optional<double>>& values, int window,
                                                      int order);

ProsodyContour extract_contour(const dsp::AudioBuffer& audio, const AnalysisConfig& config);

/// Linear-interpolated percentile (q in [0, 100]) of a non-empty sample.
double percentile(std::vector<double> values, double q);

/// Least-squares slope of y against x. Zero when x has no spread.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

IntonationLabel classify_intonation(const ProsodyContour& contour, const AnalysisConfig& config);

ProsodyLevels bin_levels(const ProsodyContour& contour, double duration, int word_count, const AnalysisConfig& config);

/// Pitch, peak energy and duration z-score prominence per word.
///
/// A word is stressed when its summed z-score exceeds the configured threshold. If no word does,
/// the highest scoring one is flagged (earliest on ties), so every non-empty utterance carries
/// at least one stressed word.
StressAnnotation stress_prominence(const ProsodyContour& contour, const std::vector<WordAlignment>& alignments,
                                   const AnalysisConfig& config);

/// Full per-utterance annotation. Stage failures are rethrown as StageError.
/// With no alignments the word count falls back to whitespace tokens of `transcript`
/// and no stress is annotated.
ProsodyAnnotation annotate(const dsp::AudioBuffer& audio, std::string_view transcript,
                           const std::vector<WordAlignment>& alignments,
                           const std::optional<SpeakerTraits>& traits, const AnalysisConfig& config);

}  // namespace ptrlab::prosody
