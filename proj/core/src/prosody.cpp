#include "ptrlab/prosody.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace ptrlab::prosody {

std::string_view to_string(Level level) {
    switch (level) {
        case Level::Low: return "low";
        case Level::Medium: return "medium";
        case Level::High: return "high";
    }
    return "medium";
}

std::string_view to_string(Speed speed) {
    switch (speed) {
        case Speed::Slow: return "slow";
        case Speed::Medium: return "medium";
        case Speed::Fast: return "fast";
    }
    return "medium";
}

std::string_view to_string(Style style) { return style == Style::Expressive ? "expressive" : "flat"; }

std::string_view to_string(Pattern pattern) {
    switch (pattern) {
        case Pattern::Rising: return "rising";
        case Pattern::Falling: return "falling";
        case Pattern::RisingFalling: return "rising_falling";
        case Pattern::FallingRising: return "falling_rising";
    }
    return "rising";
}

double hz_to_semitones(double hz) { return 12.0 * std::log2(hz / kSemitoneReferenceHz); }
double semitones_to_hz(double st) { return kSemitoneReferenceHz * std::exp2(st / 12.0); }

std::size_t ProsodyContour::voiced_count() const {
    return static_cast<std::size_t>(std::count(voiced.begin(), voiced.end(), true));
}

std::vector<WordAlignment> StressAnnotation::stressed_words() const {
    std::vector<WordAlignment> out;
    for (const auto& w : words) {
        if (w.stressed) {
            out.push_back(w.word);
        }
    }
    return out;
}

StageError::StageError(std::string stage, const std::string& what, bool insufficient_voicing)
    : std::runtime_error(stage + ": " + what), stage_(std::move(stage)), insufficient_voicing_(insufficient_voicing) {}

std::vector<std::optional<double>> smooth_voiced_runs(const std::vector<std::optional<double>>& values, int window,
                                                      int order) {
    std::vector<std::optional<double>> out(values.size());
    std::size_t i = 0;
    while (i < values.size()) {
        if (!values[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        std::vector<double> run;
        while (j < values.size() && values[j]) {
            run.push_back(*values[j]);
            ++j;
        }
        int w = std::min<int>(window, static_cast<int>(run.size()));
        if (w % 2 == 0) {
            --w;
        }
        std::vector<double> smoothed = run;
        if (w >= 3) {
            smoothed = dsp::savgol_smooth(run, w, std::min(order, w - 1));
        }
        for (std::size_t k = 0; k < run.size(); ++k) {
            out[i + k] = smoothed[k];
        }
        i = j;
    }
    return out;
}

ProsodyContour extract_contour(const dsp::AudioBuffer& audio, const AnalysisConfig& config) {
    if (audio.samples.empty()) {
        throw std::invalid_argument("extract_contour: empty audio");
    }
    const auto frames = dsp::frame_signal(audio, config.frame_ms, config.hop_ms);
    const auto pitch =
        dsp::track_pitch(frames, audio.sample_rate, {config.f0_min, config.f0_max, config.voicing_threshold});
    const auto energy = dsp::track_energy(frames);

    ProsodyContour contour;
    contour.frame_times = frames.frame_times;
    contour.energy_db = energy.db;
    contour.duration_s = audio.duration();
    contour.f0_semitones.reserve(frames.size());
    contour.voiced.reserve(frames.size());
    for (const auto& f0 : pitch.f0_hz) {
        contour.voiced.push_back(f0.has_value());
        contour.f0_semitones.push_back(f0 ? std::optional<double>(hz_to_semitones(*f0)) : std::nullopt);
    }
    contour.f0_smoothed = smooth_voiced_runs(contour.f0_semitones, config.sg_window, config.sg_order);
    return contour;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw std::invalid_argument("percentile: empty sample");
    }
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    if (x.size() < 2) {
        return 0.0;
    }
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

IntonationLabel classify_intonation(const ProsodyContour& contour, const AnalysisConfig& config) {
    std::vector<double> t;
    std::vector<double> st;
    for (std::size_t i = 0; i < contour.size(); ++i) {
        if (contour.voiced[i] && contour.f0_smoothed[i]) {
            t.push_back(contour.frame_times[i]);
            st.push_back(*contour.f0_smoothed[i]);
        }
    }
    if (st.size() < 4) {
        throw InsufficientVoicing("need at least 4 voiced frames, found " + std::to_string(st.size()));
    }

    IntonationLabel label;
    const double range = percentile(st, 95.0) - percentile(st, 5.0);
    label.style = range >= config.range_threshold_st ? Style::Expressive : Style::Flat;

    const std::size_t half = st.size() / 2;
    const std::vector<double> t1(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(half));
    const std::vector<double> y1(st.begin(), st.begin() + static_cast<std::ptrdiff_t>(half));
    const std::vector<double> t2(t.begin() + static_cast<std::ptrdiff_t>(half), t.end());
    const std::vector<double> y2(st.begin() + static_cast<std::ptrdiff_t>(half), st.end());
    const double s1 = ls_slope(t1, y1);
    const double s2 = ls_slope(t2, y2);
    const double theta = config.slope_threshold_st_s;

    if (s1 >= theta && s2 >= -theta) {
        label.pattern = Pattern::Rising;
    } else if (s1 <= -theta && s2 <= theta) {
        label.pattern = Pattern::Falling;
    } else if (s1 >= theta && s2 <= -theta) {
        label.pattern = Pattern::RisingFalling;
    } else if (s1 <= -theta && s2 >= theta) {
        label.pattern = Pattern::FallingRising;
    } else {
        label.pattern = ls_slope(t, st) >= 0.0 ? Pattern::Rising : Pattern::Falling;
    }
    return label;
}

ProsodyLevels bin_levels(const ProsodyContour& contour, double duration, int word_count,
                         const AnalysisConfig& config) {
    if (!(duration > 0.0)) {
        throw std::invalid_argument("bin_levels: duration must be positive");
    }
    if (word_count < 0) {
        throw std::invalid_argument("bin_levels: negative word count");
    }
    ProsodyLevels levels;

    std::vector<double> f0_hz;
    for (const auto& st : contour.f0_semitones) {
        if (st) {
            f0_hz.push_back(semitones_to_hz(*st));
        }
    }
    if (!f0_hz.empty()) {
        const double median = percentile(f0_hz, 50.0);
        levels.pitch_level = median < config.pitch_low_hz    ? Level::Low
                             : median > config.pitch_high_hz ? Level::High
                                                             : Level::Medium;
    }

    double db_sum = 0.0;
    std::size_t db_count = 0;
    for (double db : contour.energy_db) {
        if (db > config.silence_floor_db) {
            db_sum += db;
            ++db_count;
        }
    }
    if (db_count == 0) {
        levels.energy_level = Level::Low;
    } else {
        const double mean_db = db_sum / static_cast<double>(db_count);
        levels.energy_level = mean_db < config.energy_low_db    ? Level::Low
                              : mean_db > config.energy_high_db ? Level::High
                                                                : Level::Medium;
    }

    const double wps = static_cast<double>(word_count) / duration;
    levels.speed_level = wps < config.speed_slow_wps   ? Speed::Slow
                         : wps > config.speed_fast_wps ? Speed::Fast
                                                       : Speed::Medium;
    return levels;
}

namespace {

// Population z-scores; entries without a value score 0, as do all entries when the spread is zero.
std::vector<double> z_scores(const std::vector<std::optional<double>>& values) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& v : values) {
        if (v) {
            sum += *v;
            ++n;
        }
    }
    std::vector<double> z(values.size(), 0.0);
    if (n == 0) {
        return z;
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& v : values) {
        if (v) {
            ss += (*v - mean) * (*v - mean);
        }
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (!(sd > 1e-12)) {
        return z;
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i]) {
            z[i] = (*values[i] - mean) / sd;
        }
    }
    return z;
}

void validate_alignments(const std::vector<WordAlignment>& alignments, double span_end) {
    const double slack = 1e-6;
    for (std::size_t i = 0; i < alignments.size(); ++i) {
        const auto& a = alignments[i];
        if (!(a.t_start < a.t_end)) {
            throw std::invalid_argument("alignment " + std::to_string(i) + " ('" + a.word + "') has t_start >= t_end");
        }
        if (a.t_start < -slack || a.t_end > span_end + slack) {
            throw std::invalid_argument("alignment " + std::to_string(i) + " ('" + a.word +
                                        "') lies outside the audio span");
        }
        if (i > 0 && a.t_start < alignments[i - 1].t_end - slack) {
            throw std::invalid_argument("alignments must be sorted and non-overlapping (word " + std::to_string(i) +
                                        ")");
        }
    }
}

}  // namespace

StressAnnotation stress_prominence(const ProsodyContour& contour, const std::vector<WordAlignment>& alignments,
                                   const AnalysisConfig& config) {
    if (alignments.empty()) {
        throw std::invalid_argument("stress_prominence: empty alignments");
    }
    if (contour.size() == 0) {
        throw std::invalid_argument("stress_prominence: empty contour");
    }
    const double span_end = std::max(contour.duration_s, contour.frame_times.back());
    validate_alignments(alignments, span_end);

    std::vector<std::optional<double>> pitch;
    std::vector<std::optional<double>> peak_energy;
    std::vector<std::optional<double>> duration;
    for (const auto& word : alignments) {
        std::vector<std::size_t> frames;
        for (std::size_t i = 0; i < contour.size(); ++i) {
            const double t = contour.frame_times[i];
            if (t >= word.t_start && t < word.t_end) {
                frames.push_back(i);
            }
        }
        if (frames.empty()) {
            // Shorter than a hop: use the frame nearest the word's midpoint.
            const double mid = 0.5 * (word.t_start + word.t_end);
            std::size_t best = 0;
            for (std::size_t i = 1; i < contour.size(); ++i) {
                if (std::abs(contour.frame_times[i] - mid) < std::abs(contour.frame_times[best] - mid)) {
                    best = i;
                }
            }
            frames.push_back(best);
        }
        double f0_sum = 0.0;
        std::size_t f0_n = 0;
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t i : frames) {
            if (contour.f0_smoothed[i]) {
                f0_sum += *contour.f0_smoothed[i];
                ++f0_n;
            }
            peak = std::max(peak, contour.energy_db[i]);
        }
        pitch.push_back(f0_n > 0 ? std::optional<double>(f0_sum / static_cast<double>(f0_n)) : std::nullopt);
        peak_energy.emplace_back(peak);
        duration.emplace_back(word.t_end - word.t_start);
    }

    const auto zp = z_scores(pitch);
    const auto ze = z_scores(peak_energy);
    const auto zd = z_scores(duration);

    StressAnnotation out;
    std::size_t top = 0;
    bool any = false;
    for (std::size_t i = 0; i < alignments.size(); ++i) {
        const double score = zp[i] + ze[i] + zd[i];
        const bool stressed = score > config.stress_threshold;
        any = any || stressed;
        out.words.push_back({alignments[i], score, stressed});
        if (score > out.words[top].score) {
            top = i;
        }
    }
    if (!any) {
        out.words[top].stressed = true;
    }
    return out;
}

ProsodyAnnotation annotate(const dsp::AudioBuffer& audio, std::string_view transcript,
                           const std::vector<WordAlignment>& alignments,
                           const std::optional<SpeakerTraits>& traits, const AnalysisConfig& config) {
    ProsodyAnnotation record;
    ProsodyContour contour;
    try {
        contour = extract_contour(audio, config);
    } catch (const std::exception& e) {
        throw StageError("contour", e.what());
    }
    try {
        record.intonation = classify_intonation(contour, config);
    } catch (const InsufficientVoicing& e) {
        throw StageError("intonation", e.what(), true);
    } catch (const std::exception& e) {
        throw StageError("intonation", e.what());
    }

    record.duration = audio.duration();
    int word_count = static_cast<int>(alignments.size());
    if (alignments.empty()) {
        std::istringstream tokens{std::string(transcript)};
        std::string token;
        while (tokens >> token) {
            ++word_count;
        }
    }
    record.words_per_second = static_cast<double>(word_count) / record.duration;
    try {
        record.levels = bin_levels(contour, record.duration, word_count, config);
    } catch (const std::exception& e) {
        throw StageError("levels", e.what());
    }
    if (!alignments.empty()) {
        try {
            record.stress = stress_prominence(contour, alignments, config);
        } catch (const std::exception& e) {
            throw StageError("stress", e.what());
        }
    }
    record.speaker_traits = traits;
    return record;
}

}  // namespace ptrlab::prosody
