#include "ptrlab/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ptrlab::dsp {

void AudioBuffer::validate() const {
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
        throw std::invalid_argument("sample rate must be positive");
    }
    for (double s : samples) {
        if (!std::isfinite(s)) {
            throw std::invalid_argument("audio contains a non-finite sample");
        }
    }
}

std::size_t ms_to_samples(double ms, double sample_rate) {
    return static_cast<std::size_t>(std::llround(ms * sample_rate / 1000.0));
}

FrameSeries frame_signal(const AudioBuffer& audio, double frame_ms, double hop_ms) {
    if (!(frame_ms > 0.0) || !(hop_ms > 0.0)) {
        throw std::invalid_argument("frame_ms and hop_ms must be positive");
    }
    audio.validate();
    FrameSeries out;
    out.frame_length = ms_to_samples(frame_ms, audio.sample_rate);
    out.hop_length = ms_to_samples(hop_ms, audio.sample_rate);
    if (out.frame_length < 2) {
        throw std::invalid_argument("frame length must be at least 2 samples");
    }
    if (out.hop_length < 1) {
        throw std::invalid_argument("hop length must be at least 1 sample");
    }
    const std::size_t n = audio.samples.size();
    if (n < out.frame_length) {
        return out;
    }
    const std::size_t count = (n - out.frame_length) / out.hop_length + 1;
    out.frames.reserve(count);
    out.frame_times.reserve(count);
    const double half = static_cast<double>(out.frame_length) / 2.0;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t start = i * out.hop_length;
        auto first = audio.samples.begin() + static_cast<std::ptrdiff_t>(start);
        out.frames.emplace_back(first, first + static_cast<std::ptrdiff_t>(out.frame_length));
        out.frame_times.push_back((static_cast<double>(start) + half) / audio.sample_rate);
    }
    return out;
}

double rms_energy(std::span<const double> frame) {
    if (frame.empty()) {
        throw std::invalid_argument("rms_energy: empty frame");
    }
    double acc = 0.0;
    for (double s : frame) {
        acc += s * s;
    }
    return std::sqrt(acc / static_cast<double>(frame.size()));
}

double energy_db(double rms) { return 20.0 * std::log10(rms + kEnergyFloor); }

double normalized_autocorrelation(std::span<const double> frame, std::size_t lag) {
    if (lag >= frame.size()) {
        return 0.0;
    }
    const std::size_t overlap = frame.size() - lag;
    double cross = 0.0;
    double head = 0.0;
    double tail = 0.0;
    for (std::size_t i = 0; i < overlap; ++i) {
        const double a = frame[i];
        const double b = frame[i + lag];
        cross += a * b;
        head += a * a;
        tail += b * b;
    }
    const double denom = std::sqrt(head * tail);
    if (!(denom > 0.0)) {
        return 0.0;
    }
    return std::clamp(cross / denom, -1.0, 1.0);
}

namespace {

struct PitchCandidate {
    double f0_hz = 0.0;
    double clarity = 0.0;
    bool found = false;
};

void check_pitch_args(std::size_t frame_size, double sample_rate, double f0_min, double f0_max) {
    if (!(sample_rate > 0.0)) {
        throw std::invalid_argument("estimate_f0: sample rate must be positive");
    }
    if (!(f0_min > 0.0) || !(f0_min < f0_max) || !(f0_max < sample_rate / 2.0)) {
        throw std::invalid_argument("estimate_f0: require 0 < f0_min < f0_max < sample_rate/2");
    }
    const double needed = 2.0 * sample_rate / f0_min;
    if (static_cast<double>(frame_size) + 1e-9 < needed) {
        throw std::invalid_argument("estimate_f0: frame shorter than two periods of f0_min (" +
                                    std::to_string(frame_size) + " < " + std::to_string(needed) + " samples)");
    }
}

PitchCandidate pitch_candidate(std::span<const double> frame, double sample_rate, double f0_min, double f0_max) {
    const std::size_t n = frame.size();
    const auto lag_lo = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(sample_rate / f0_max)));
    const auto lag_hi = std::min<std::size_t>(n - 1, static_cast<std::size_t>(std::ceil(sample_rate / f0_min)));
    const std::size_t first = lag_lo > 1 ? lag_lo - 1 : lag_lo;
    const std::size_t last = std::min(lag_hi + 1, n - 1);

    std::vector<double> r(last + 1, 0.0);
    for (std::size_t lag = first; lag <= last; ++lag) {
        r[lag] = normalized_autocorrelation(frame, lag);
    }
    auto is_peak = [&](std::size_t lag) {
        const bool left = lag == first || r[lag] >= r[lag - 1];
        const bool right = lag == last || r[lag] >= r[lag + 1];
        return left && right;
    };

    double best = 0.0;
    for (std::size_t lag = lag_lo; lag <= lag_hi; ++lag) {
        if (is_peak(lag)) {
            best = std::max(best, r[lag]);
        }
    }
    PitchCandidate out;
    if (!(best > 0.0)) {
        return out;
    }
    for (std::size_t lag = lag_lo; lag <= lag_hi; ++lag) {
        if (!is_peak(lag) || r[lag] < 0.9 * best) {
            continue;
        }
        double shift = 0.0;
        if (lag > first && lag < last) {
            const double a = r[lag - 1];
            const double b = r[lag];
            const double c = r[lag + 1];
            const double curvature = a - 2.0 * b + c;
            if (curvature < 0.0) {
                shift = std::clamp(0.5 * (a - c) / curvature, -0.5, 0.5);
            }
        }
        out.f0_hz = std::clamp(sample_rate / (static_cast<double>(lag) + shift), f0_min, f0_max);
        out.clarity = std::clamp(r[lag], 0.0, 1.0);
        out.found = true;
        return out;
    }
    return out;
}

}  // namespace

std::optional<PitchEstimate> estimate_f0(std::span<const double> frame, double sample_rate, double f0_min,
                                         double f0_max, double voicing_threshold) {
    check_pitch_args(frame.size(), sample_rate, f0_min, f0_max);
    const auto cand = pitch_candidate(frame, sample_rate, f0_min, f0_max);
    if (!cand.found || cand.clarity < voicing_threshold) {
        return std::nullopt;
    }
    return PitchEstimate{cand.f0_hz, cand.clarity};
}

PitchTrack track_pitch(const FrameSeries& frames, double sample_rate, const PitchSettings& settings) {
    PitchTrack track;
    track.f0_hz.reserve(frames.size());
    track.clarity.reserve(frames.size());
    for (const auto& frame : frames.frames) {
        check_pitch_args(frame.size(), sample_rate, settings.f0_min, settings.f0_max);
        const auto cand = pitch_candidate(frame, sample_rate, settings.f0_min, settings.f0_max);
        track.clarity.push_back(cand.clarity);
        if (cand.found && cand.clarity >= settings.voicing_threshold) {
            track.f0_hz.emplace_back(cand.f0_hz);
        } else {
            track.f0_hz.emplace_back(std::nullopt);
        }
    }
    return track;
}

EnergyTrack track_energy(const FrameSeries& frames) {
    EnergyTrack track;
    track.rms.reserve(frames.size());
    track.db.reserve(frames.size());
    for (const auto& frame : frames.frames) {
        const double rms = rms_energy(frame);
        track.rms.push_back(rms);
        track.db.push_back(energy_db(rms));
    }
    return track;
}

namespace {

// a (a-1) ... (a-b+1)
double falling_factorial(int a, int b) {
    double out = 1.0;
    for (int j = 0; j < b; ++j) {
        out *= static_cast<double>(a - j);
    }
    return out;
}

// Gram polynomial of degree k on the 2m+1 points -m..m, evaluated at i.
std::vector<double> gram_polynomials(int i, int m, int max_degree) {
    std::vector<double> p(static_cast<std::size_t>(max_degree) + 1, 0.0);
    p[0] = 1.0;
    for (int k = 1; k <= max_degree; ++k) {
        const double denom = static_cast<double>(k) * static_cast<double>(2 * m - k + 1);
        const double prev2 = k >= 2 ? p[static_cast<std::size_t>(k - 2)] : 0.0;
        p[static_cast<std::size_t>(k)] =
            2.0 * static_cast<double>(2 * k - 1) / denom * static_cast<double>(i) * p[static_cast<std::size_t>(k - 1)] -
            static_cast<double>(k - 1) * static_cast<double>(2 * m + k) / denom * prev2;
    }
    return p;
}

std::size_t reflect_index(std::ptrdiff_t j, std::size_t n) {
    if (n == 1) {
        return 0;
    }
    const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
    j %= period;
    if (j < 0) {
        j += period;
    }
    if (j >= static_cast<std::ptrdiff_t>(n)) {
        j = period - j;
    }
    return static_cast<std::size_t>(j);
}

}  // namespace

std::vector<double> savgol_coefficients(int window, int order) {
    if (window < 3 || window % 2 == 0) {
        throw std::invalid_argument("savgol: window must be odd and >= 3, got " + std::to_string(window));
    }
    if (order < 0 || order >= window) {
        throw std::invalid_argument("savgol: order must satisfy 0 <= order < window");
    }
    const int m = window / 2;
    const auto at_center = gram_polynomials(0, m, order);
    std::vector<double> norm(static_cast<std::size_t>(order) + 1);
    for (int k = 0; k <= order; ++k) {
        norm[static_cast<std::size_t>(k)] =
            static_cast<double>(2 * k + 1) * falling_factorial(2 * m, k) / falling_factorial(2 * m + k + 1, k + 1);
    }
    std::vector<double> h(static_cast<std::size_t>(window), 0.0);
    for (int i = -m; i <= m; ++i) {
        const auto p = gram_polynomials(i, m, order);
        double acc = 0.0;
        for (int k = 0; k <= order; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            acc += norm[ku] * p[ku] * at_center[ku];
        }
        h[static_cast<std::size_t>(i + m)] = acc;
    }
    return h;
}

std::vector<double> savgol_smooth(std::span<const double> series, int window, int order) {
    const auto h = savgol_coefficients(window, order);
    if (series.empty()) {
        throw std::invalid_argument("savgol_smooth: empty series");
    }
    const std::ptrdiff_t m = window / 2;
    const std::size_t n = series.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        double acc = 0.0;
        for (std::ptrdiff_t k = -m; k <= m; ++k) {
            acc += h[static_cast<std::size_t>(k + m)] * series[reflect_index(static_cast<std::ptrdiff_t>(t) + k, n)];
        }
        out[t] = acc;
    }
    return out;
}

}  // namespace ptrlab::dsp
