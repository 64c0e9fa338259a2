#include "wav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace ptrlab::cli {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
    }
}

void put16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

dsp::AudioBuffer read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw WavError("cannot open " + path.string());
    }
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw WavError("not a RIFF/WAVE file");
    }

    bool have_fmt = false;
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t rate = 0;
    std::uint16_t bits = 0;
    const unsigned char* data = nullptr;
    std::size_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const std::uint32_t size = le32(chunk + 4);
        const std::size_t body = pos + 8;
        const std::size_t available = bytes.size() - body;
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16 || size > available) {
                throw WavError("truncated fmt chunk");
            }
            format = le16(chunk + 8);
            channels = le16(chunk + 10);
            rate = le32(chunk + 12);
            bits = le16(chunk + 22);
            if (format == kFormatExtensible) {
                if (size < 40) {
                    throw WavError("truncated extensible fmt chunk");
                }
                format = le16(chunk + 8 + 24);  // first two bytes of the sub-format GUID
            }
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = chunk + 8;
            data_size = std::min<std::size_t>(size, available);
        }
        pos = body + size + (size & 1u);
    }
    if (!have_fmt) {
        throw WavError("missing fmt chunk");
    }
    if (data == nullptr) {
        throw WavError("missing data chunk");
    }
    if (channels != 1) {
        throw WavError("unsupported channels: " + std::to_string(channels) + " (mono required)");
    }
    if (rate == 0) {
        throw WavError("sample rate is zero");
    }

    dsp::AudioBuffer audio;
    audio.sample_rate = static_cast<double>(rate);
    if (format == kFormatPcm && bits == 16) {
        const std::size_t n = data_size / 2;
        audio.samples.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto v = static_cast<std::int16_t>(le16(data + 2 * i));
            audio.samples.push_back(static_cast<double>(v) / 32768.0);
        }
    } else if (format == kFormatFloat && bits == 32) {
        const std::size_t n = data_size / 4;
        audio.samples.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t raw = le32(data + 4 * i);
            float f;
            std::memcpy(&f, &raw, sizeof f);
            if (!std::isfinite(f)) {
                throw WavError("non-finite float sample at index " + std::to_string(i));
            }
            audio.samples.push_back(static_cast<double>(f));
        }
    } else {
        throw WavError("unsupported encoding: format " + std::to_string(format) + ", " + std::to_string(bits) +
                       " bits (16-bit PCM or 32-bit float required)");
    }
    return audio;
}

void write_wav(const std::filesystem::path& path, const dsp::AudioBuffer& audio, WavEncoding encoding, int channels) {
    const std::uint16_t bits = encoding == WavEncoding::Pcm16 ? 16 : 32;
    const std::uint16_t block = static_cast<std::uint16_t>(channels * bits / 8);
    const auto rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate));
    const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * block);

    std::vector<unsigned char> out;
    out.reserve(44 + data_bytes);
    put_tag(out, "RIFF");
    put32(out, 36 + data_bytes);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put32(out, 16);
    put16(out, encoding == WavEncoding::Pcm16 ? kFormatPcm : kFormatFloat);
    put16(out, static_cast<std::uint16_t>(channels));
    put32(out, rate);
    put32(out, rate * block);
    put16(out, block);
    put16(out, bits);
    put_tag(out, "data");
    put32(out, data_bytes);
    for (double s : audio.samples) {
        for (int c = 0; c < channels; ++c) {
            if (encoding == WavEncoding::Pcm16) {
                const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
                put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
            } else {
                const auto f = static_cast<float>(s);
                std::uint32_t raw;
                std::memcpy(&raw, &f, sizeof raw);
                put32(out, raw);
            }
        }
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw WavError("cannot write " + path.string());
    }
    file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

}  // namespace ptrlab::cli
