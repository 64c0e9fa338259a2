#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace ptrlab::dsp {

/// Mono PCM signal with its sample rate. Samples are nominally in [-1, 1].
struct AudioBuffer {
    std::vector<double> samples;
    double sample_rate = 0.0;

    /// Throws std::invalid_argument if the rate is non-positive or any sample is not finite.
    void validate() const;
    double duration() const { return sample_rate > 0.0 ? static_cast<double>(samples.size()) / sample_rate : 0.0; }
};

struct FrameSeries {
    std::vector<std::vector<double>> frames;
    std::size_t frame_length = 0;
    std::size_t hop_length = 0;
    std::vector<double> frame_times;  // center of each frame, seconds

    std::size_t size() const { return frames.size(); }
};

struct PitchEstimate {
    double f0_hz = 0.0;
    double clarity = 0.0;
};

struct PitchTrack {
    std::vector<std::optional<double>> f0_hz;
    std::vector<double> clarity;
};

struct EnergyTrack {
    std::vector<double> rms;
    std::vector<double> db;
};

inline constexpr double kEnergyFloor = 1e-10;

struct PitchSettings {
    double f0_min = 80.0;
    double f0_max = 400.0;
    double voicing_threshold = 0.5;
};

/// Converts a duration in milliseconds to a whole number of samples (rounded to nearest).
std::size_t ms_to_samples(double ms, double sample_rate);

/// Splits the signal into overlapping frames. Partial tail frames are dropped.
FrameSeries frame_signal(const AudioBuffer& audio, double frame_ms, double hop_ms);

double rms_energy(std::span<const double> frame);
double energy_db(double rms);

/// Normalized autocorrelation of `frame` at `lag`, in [-1, 1]; 0 when either segment is silent.
double normalized_autocorrelation(std::span<const double> frame, std::size_t lag);

/// Autocorrelation pitch estimate over the lag band [sample_rate/f0_max, sample_rate/f0_min].
///
/// The first local maximum reaching 90% of the band's global maximum is taken, which
/// avoids picking a sub-harmonic lag on strongly periodic input. Its lag is refined by
/// parabolic interpolation. The estimate is absent when the peak clarity falls below
/// `voicing_threshold`.
std::optional<PitchEstimate> estimate_f0(std::span<const double> frame, double sample_rate, double f0_min,
                                         double f0_max, double voicing_threshold);

PitchTrack track_pitch(const FrameSeries& frames, double sample_rate, const PitchSettings& settings);
EnergyTrack track_energy(const FrameSeries& frames);

/// Central-point Savitzky–Golay smoothing kernel of length `window` for a polynomial of degree `order`.
std::vector<double> savgol_coefficients(int window, int order);

/// Savitzky–Golay smoothing with mirror (reflect, edge not repeated) padding at both ends.
std::vector<double> savgol_smooth(std::span<const double> series, int window, int order);

}  // namespace ptrlab::dsp
