#include "records.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace ptrlab::cli {

using ordered_json = nlohmann::ordered_json;
using nlohmann::json;

namespace {

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r\n") == std::string::npos; }

json parse_line(const std::string& line, std::size_t line_no) {
    json row;
    try {
        row = json::parse(line);
    } catch (const json::parse_error& e) {
        throw RecordError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!row.is_object()) {
        throw RecordError(line_no, "expected a JSON object");
    }
    return row;
}

std::string required_string(const json& row, const char* key, std::size_t line_no) {
    const auto it = row.find(key);
    if (it == row.end()) {
        throw RecordError(line_no, std::string("missing field '") + key + "'");
    }
    if (!it->is_string()) {
        throw RecordError(line_no, std::string("field '") + key + "' must be a string");
    }
    return it->get<std::string>();
}

double required_number(const json& obj, const char* key, std::size_t line_no) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_number()) {
        throw RecordError(line_no, std::string("field '") + key + "' must be a number");
    }
    return it->get<double>();
}

std::optional<prosody::SpeakerTraits> read_traits(const json& row, std::size_t line_no) {
    const auto it = row.find("speaker_traits");
    if (it == row.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_object()) {
        throw RecordError(line_no, "speaker_traits must be an object");
    }
    prosody::SpeakerTraits traits;
    for (const auto& [key, target] : {std::pair{"gender", &traits.gender}, std::pair{"age_group", &traits.age_group}}) {
        const auto field = it->find(key);
        if (field == it->end() || field->is_null()) {
            continue;
        }
        if (!field->is_string()) {
            throw RecordError(line_no, std::string("speaker_traits.") + key + " must be a string");
        }
        *target = field->get<std::string>();
    }
    return traits;
}

reward::CriterionScores read_scores(const json& obj, std::size_t line_no) {
    if (!obj.is_object()) {
        throw RecordError(line_no, "criterion_scores must be an object");
    }
    std::array<int, 4> g{};
    for (std::size_t j = 0; j < 4; ++j) {
        const std::string name(reward::CriterionScores::kFieldNames[j]);
        const auto it = obj.find(name);
        if (it == obj.end()) {
            throw RecordError(line_no, "criterion_scores missing '" + name + "'");
        }
        if (!it->is_number_integer()) {
            throw RecordError(line_no, "criterion_scores." + name + " must be an integer in the 1-5 range");
        }
        const auto v = it->get<long long>();
        if (v < 1 || v > 5) {
            throw RecordError(line_no, "criterion_scores." + name + " = " + std::to_string(v) +
                                           " is outside the 1-5 range");
        }
        g[j] = static_cast<int>(v);
    }
    return reward::CriterionScores(g[0], g[1], g[2], g[3]);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == sep) {
        out.emplace_back();
    }
    return out;
}

double csv_number(const std::string& cell, const char* column, std::size_t line_no) {
    double v = 0.0;
    const auto* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
    if (cell.empty() || ec != std::errc() || ptr != end) {
        throw RecordError(line_no, std::string("column '") + column + "' is not a number: '" + cell + "'");
    }
    return v;
}

}  // namespace

std::string annotation_json(const std::string& id, const prosody::ProsodyAnnotation& a) {
    ordered_json row;
    row["id"] = id;
    row["duration_s"] = a.duration;
    row["pitch_level"] = std::string(prosody::to_string(a.levels.pitch_level));
    row["energy_level"] = std::string(prosody::to_string(a.levels.energy_level));
    row["speed_level"] = std::string(prosody::to_string(a.levels.speed_level));
    row["intonation_style"] = std::string(prosody::to_string(a.intonation.style));
    row["intonation_pattern"] = std::string(prosody::to_string(a.intonation.pattern));
    row["words_per_second"] = a.words_per_second;
    ordered_json stressed = ordered_json::array();
    for (const auto& w : a.stress.stressed_words()) {
        ordered_json entry;
        entry["word"] = w.word;
        entry["t_start"] = w.t_start;
        entry["t_end"] = w.t_end;
        stressed.push_back(std::move(entry));
    }
    row["stressed_words"] = std::move(stressed);
    if (a.speaker_traits) {
        ordered_json traits;
        traits["gender"] = a.speaker_traits->gender ? ordered_json(*a.speaker_traits->gender) : ordered_json();
        traits["age_group"] = a.speaker_traits->age_group ? ordered_json(*a.speaker_traits->age_group) : ordered_json();
        row["speaker_traits"] = std::move(traits);
    }
    return row.dump();
}

std::map<std::string, AlignmentEntry> read_alignments(std::istream& in) {
    std::map<std::string, AlignmentEntry> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) {
            continue;
        }
        const json row = parse_line(line, line_no);
        const std::string id = required_string(row, "id", line_no);
        AlignmentEntry entry;
        const auto words = row.find("words");
        if (words != row.end()) {
            if (!words->is_array()) {
                throw RecordError(line_no, "words must be an array");
            }
            for (const auto& w : *words) {
                if (!w.is_object()) {
                    throw RecordError(line_no, "each word must be an object");
                }
                prosody::WordAlignment wa{required_string(w, "word", line_no), required_number(w, "t_start", line_no),
                                          required_number(w, "t_end", line_no)};
                if (!(wa.t_end > wa.t_start) || wa.t_start < 0.0) {
                    throw RecordError(line_no, "word '" + wa.word + "' needs 0 <= t_start < t_end");
                }
                entry.words.push_back(std::move(wa));
            }
        }
        if (const auto t = row.find("transcript"); t != row.end() && !t->is_null()) {
            if (!t->is_string()) {
                throw RecordError(line_no, "transcript must be a string");
            }
            entry.transcript = t->get<std::string>();
        }
        entry.speaker_traits = read_traits(row, line_no);
        if (!out.emplace(id, std::move(entry)).second) {
            throw RecordError(line_no, "duplicate id '" + id + "'");
        }
    }
    return out;
}

std::vector<ScoringRecord> read_scoring_records(std::istream& in) {
    std::vector<ScoringRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) {
            continue;
        }
        const json row = parse_line(line, line_no);
        ScoringRecord rec;
        rec.line = line_no;
        rec.id = required_string(row, "id", line_no);
        const std::string gold = required_string(row, "gold_label", line_no);
        const auto label = reward::canonicalize_label(gold);
        if (!label) {
            throw RecordError(line_no, "gold_label '" + gold + "' is not a known emotion");
        }
        rec.gold = *label;
        rec.response = required_string(row, "response", line_no);
        if (const auto s = row.find("criterion_scores"); s != row.end() && !s->is_null()) {
            rec.criterion_scores = read_scores(*s, line_no);
        }
        for (const auto& [key, value] : row.items()) {
            if (value.is_string()) {
                rec.extra[key] = value.get<std::string>();
            } else if (value.is_number_integer()) {
                rec.extra[key] = std::to_string(value.get<long long>());
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::string scored_json(const ScoredRow& r) {
    ordered_json row;
    row["id"] = r.id;
    row["R_f"] = r.format;
    row["R_o"] = r.outcome;
    row["R_t"] = r.reasoning;
    row["tau"] = r.tau;
    row["R_i"] = r.composite;
    return row.dump();
}

std::string format_number(double value) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc()) {
        throw std::runtime_error("number formatting failed");
    }
    return std::string(buf.data(), ptr);
}

void write_metrics_csv(std::ostream& out, const std::vector<toyenv::MetricsRow>& rows) {
    out << kMetricsHeader << '\n';
    for (const auto& r : rows) {
        out << r.step << ',' << format_number(r.accuracy) << ',' << format_number(r.mean_reward) << ','
            << format_number(r.tau_mean) << ',' << (r.gate_open ? 1 : 0) << ',' << format_number(r.kl) << ','
            << format_number(r.loss) << ',' << format_number(r.fidelity_phi) << '\n';
    }
}

std::vector<toyenv::MetricsRow> read_metrics_csv(std::istream& in) {
    static constexpr std::array<const char*, 8> kColumns = {"step", "accuracy", "mean_reward", "tau_mean",
                                                            "gate_open", "kl", "loss", "fidelity_phi"};
    std::string line;
    if (!std::getline(in, line)) {
        throw RecordError(0, "empty metrics file");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kMetricsHeader) {
        throw RecordError(1, std::string("expected header '") + kMetricsHeader + "'");
    }
    std::vector<toyenv::MetricsRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto cells = split(line, ',');
        if (cells.size() != kColumns.size()) {
            throw RecordError(line_no, "expected 8 columns, found " + std::to_string(cells.size()));
        }
        std::array<double, 8> v{};
        for (std::size_t c = 0; c < cells.size(); ++c) {
            v[c] = csv_number(cells[c], kColumns[c], line_no);
        }
        if (v[0] < 0 || v[0] != std::floor(v[0])) {
            throw RecordError(line_no, "step must be a non-negative integer");
        }
        if (v[4] != 0.0 && v[4] != 1.0) {
            throw RecordError(line_no, "gate_open must be 0 or 1");
        }
        toyenv::MetricsRow row;
        row.step = static_cast<std::size_t>(v[0]);
        row.accuracy = v[1];
        row.mean_reward = v[2];
        row.tau_mean = v[3];
        row.gate_open = v[4] == 1.0;
        row.kl = v[5];
        row.loss = v[6];
        row.fidelity_phi = v[7];
        if (!rows.empty()) {
            if (row.step <= rows.back().step) {
                throw RecordError(line_no, "step column is not strictly increasing");
            }
            if (rows.back().gate_open && !row.gate_open) {
                throw RecordError(line_no, "gate_open column decreases");
            }
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace ptrlab::cli
