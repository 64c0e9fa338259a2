#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "ptrlab/dsp.hpp"

namespace ptrlab::cli {

class WavError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reads a mono RIFF/WAVE file holding 16-bit integer or 32-bit float PCM
/// (plain or WAVE_FORMAT_EXTENSIBLE). Samples are scaled to [-1, 1].
dsp::AudioBuffer read_wav(const std::filesystem::path& path);

enum class WavEncoding { Pcm16, Float32 };

/// Writes `audio`, duplicating each sample across `channels` (more than one channel is only useful
/// for producing rejected test input).
void write_wav(const std::filesystem::path& path, const dsp::AudioBuffer& audio, WavEncoding encoding,
               int channels = 1);

}  // namespace ptrlab::cli
