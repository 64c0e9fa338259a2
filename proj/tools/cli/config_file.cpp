#include "config_file.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <string>

namespace ptrlab::cli {

using toyenv::ConfigError;

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError(key, "expected a number, got '" + value + "'");
    }
    return out;
}

long long to_integer(const std::string& key, const std::string& value) {
    long long out = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError(key, "expected an integer, got '" + value + "'");
    }
    return out;
}

std::size_t to_count(const std::string& key, const std::string& value) {
    const long long v = to_integer(key, value);
    if (v < 0) {
        throw ConfigError(key, "must be non-negative");
    }
    return static_cast<std::size_t>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") {
        return true;
    }
    if (value == "false" || value == "0" || value == "no" || value == "off") {
        return false;
    }
    throw ConfigError(key, "expected true/false, got '" + value + "'");
}

using Setter = std::function<void(Settings&, const std::string& key, const std::string& value)>;

template <typename Member>
Setter real(Member member) {
    return [member](Settings& s, const std::string& k, const std::string& v) { member(s) = to_double(k, v); };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"frame_ms", real([](Settings& s) -> double& { return s.analysis.frame_ms; })},
        {"hop_ms", real([](Settings& s) -> double& { return s.analysis.hop_ms; })},
        {"f0_min", real([](Settings& s) -> double& { return s.analysis.f0_min; })},
        {"f0_max", real([](Settings& s) -> double& { return s.analysis.f0_max; })},
        {"voicing_threshold", real([](Settings& s) -> double& { return s.analysis.voicing_threshold; })},
        {"sg_window", [](Settings& s, const std::string& k, const std::string& v) {
             s.analysis.sg_window = static_cast<int>(to_integer(k, v));
         }},
        {"sg_order", [](Settings& s, const std::string& k, const std::string& v) {
             s.analysis.sg_order = static_cast<int>(to_integer(k, v));
         }},
        {"range_threshold_st", real([](Settings& s) -> double& { return s.analysis.range_threshold_st; })},
        {"slope_threshold_st_s", real([](Settings& s) -> double& { return s.analysis.slope_threshold_st_s; })},
        {"pitch_low_hz", real([](Settings& s) -> double& { return s.analysis.pitch_low_hz; })},
        {"pitch_high_hz", real([](Settings& s) -> double& { return s.analysis.pitch_high_hz; })},
        {"energy_low_db", real([](Settings& s) -> double& { return s.analysis.energy_low_db; })},
        {"energy_high_db", real([](Settings& s) -> double& { return s.analysis.energy_high_db; })},
        {"silence_floor_db", real([](Settings& s) -> double& { return s.analysis.silence_floor_db; })},
        {"speed_slow_wps", real([](Settings& s) -> double& { return s.analysis.speed_slow_wps; })},
        {"speed_fast_wps", real([](Settings& s) -> double& { return s.analysis.speed_fast_wps; })},
        {"stress_threshold", real([](Settings& s) -> double& { return s.analysis.stress_threshold; })},

        {"alpha_f", real([](Settings& s) -> double& { return s.train.alpha.alpha_f; })},
        {"alpha_o", real([](Settings& s) -> double& { return s.train.alpha.alpha_o; })},
        {"alpha_t", real([](Settings& s) -> double& { return s.train.alpha.alpha_t; })},
        {"w1", real([](Settings& s) -> double& { return s.train.reasoning_weights[0]; })},
        {"w2", real([](Settings& s) -> double& { return s.train.reasoning_weights[1]; })},
        {"w3", real([](Settings& s) -> double& { return s.train.reasoning_weights[2]; })},
        {"w4", real([](Settings& s) -> double& { return s.train.reasoning_weights[3]; })},
        {"gate_window", [](Settings& s, const std::string& k, const std::string& v) {
             s.train.gate_window = to_count(k, v);
         }},
        {"gate_threshold", real([](Settings& s) -> double& { return s.train.gate_threshold; })},
        {"group_size", [](Settings& s, const std::string& k, const std::string& v) {
             s.train.grpo.group_size = static_cast<int>(to_integer(k, v));
         }},
        {"kl_coefficient", real([](Settings& s) -> double& { return s.train.grpo.kl_coefficient; })},
        {"learning_rate", real([](Settings& s) -> double& { return s.train.grpo.learning_rate; })},
        {"steps", [](Settings& s, const std::string& k, const std::string& v) { s.train.steps = to_count(k, v); }},
        {"batch_queries", [](Settings& s, const std::string& k, const std::string& v) {
             s.train.batch_queries = to_count(k, v);
         }},
        {"noise_eps", real([](Settings& s) -> double& { return s.train.noise_eps; })},
        {"emotions", [](Settings& s, const std::string& k, const std::string& v) {
             s.train.emotions = to_count(k, v);
         }},
        {"adversarial", [](Settings& s, const std::string& k, const std::string& v) {
             s.train.adversarial = to_bool(k, v);
         }},
        {"trust_enabled", [](Settings& s, const std::string& k, const std::string& v) {
             s.train.trust_enabled = to_bool(k, v);
         }},
        {"progressive", [](Settings& s, const std::string& k, const std::string& v) {
             s.train.progressive = to_bool(k, v);
         }},
        {"init_fidelity_logit", real([](Settings& s) -> double& { return s.train.init_fidelity_logit; })},
        {"seed", [](Settings& s, const std::string& k, const std::string& v) {
             s.train.seed = static_cast<std::uint64_t>(to_count(k, v));
         }},
    };
    return table;
}

void validate_analysis(const prosody::AnalysisConfig& a) {
    if (!(a.frame_ms > 0.0)) {
        throw ConfigError("frame_ms", "must be > 0");
    }
    if (!(a.hop_ms > 0.0)) {
        throw ConfigError("hop_ms", "must be > 0");
    }
    if (!(a.f0_min > 0.0)) {
        throw ConfigError("f0_min", "must be > 0");
    }
    if (!(a.f0_max > a.f0_min)) {
        throw ConfigError("f0_max", "must exceed f0_min");
    }
    if (a.sg_window < 3 || a.sg_window % 2 == 0) {
        throw ConfigError("sg_window", "must be odd and >= 3");
    }
    if (a.sg_order < 0 || a.sg_order >= a.sg_window) {
        throw ConfigError("sg_order", "must satisfy 0 <= sg_order < sg_window");
    }
    if (!(a.pitch_low_hz <= a.pitch_high_hz)) {
        throw ConfigError("pitch_low_hz", "must not exceed pitch_high_hz");
    }
    if (!(a.energy_low_db <= a.energy_high_db)) {
        throw ConfigError("energy_low_db", "must not exceed energy_high_db");
    }
    if (!(a.speed_slow_wps <= a.speed_fast_wps)) {
        throw ConfigError("speed_slow_wps", "must not exceed speed_fast_wps");
    }
}

}  // namespace

Settings parse_settings(std::istream& in) {
    Settings settings;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) {
            throw ConfigError(key, "unknown config key");
        }
        it->second(settings, key, value);
    }
    validate_analysis(settings.analysis);
    settings.train.validate();
    return settings;
}

Settings load_settings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read config file " + path.string());
    }
    return parse_settings(in);
}

}  // namespace ptrlab::cli
