#pragma once

#include <filesystem>
#include <istream>

#include "ptrlab/prosody.hpp"
#include "ptrlab/toyenv.hpp"

namespace ptrlab::cli {

struct Settings {
    prosody::AnalysisConfig analysis;
    toyenv::TrainConfig train;
};

/// Parses `key = value` lines. Blank lines and `#` comments are ignored. Unknown keys and
/// unparsable values raise toyenv::ConfigError carrying the key. Training values are validated.
Settings parse_settings(std::istream& in);

/// Throws std::runtime_error if the file cannot be opened.
Settings load_settings(const std::filesystem::path& path);

}  // namespace ptrlab::cli
