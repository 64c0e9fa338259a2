#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "config_file.hpp"
#include "records.hpp"
#include "wav.hpp"

namespace ptrlab::cli {

namespace fs = std::filesystem;

namespace {

struct AnnotateArgs {
    std::string input;
    std::string alignments;
    std::string out;
    std::string config;
};

struct ScoreArgs {
    std::string responses;
    std::string out;
    double alpha_f = reward::RewardWeights{}.alpha_f;
    double alpha_o = reward::RewardWeights{}.alpha_o;
    double alpha_t = reward::RewardWeights{}.alpha_t;
    std::vector<double> weights = {0.25, 0.25, 0.25, 0.25};
    std::string gate = "open";
    std::string group_by = "id-prefix";
};

struct TrainArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

struct ReportArgs {
    std::vector<std::string> metrics;
    std::size_t window = 200;
};

std::vector<fs::path> wav_inputs(const fs::path& input) {
    if (!fs::is_directory(input)) {
        if (!fs::exists(input)) {
            throw std::runtime_error("input not found: " + input.string());
        }
        return {input};
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(input)) {
        if (!entry.is_regular_file()) {
            continue;
        }
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".wav") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    return files;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    return out;
}

int cmd_annotate(const AnnotateArgs& args, std::ostream& out, std::ostream& err) {
    Settings settings;
    std::map<std::string, AlignmentEntry> alignments;
    std::vector<fs::path> files;
    try {
        if (!args.config.empty()) {
            settings = load_settings(args.config);
        }
        if (!args.alignments.empty()) {
            std::ifstream in(args.alignments);
            if (!in) {
                throw std::runtime_error("cannot read alignments " + args.alignments);
            }
            alignments = read_alignments(in);
        }
        files = wav_inputs(args.input);
    } catch (const std::exception& e) {
        err << "annotate: " << e.what() << '\n';
        return kExitUsage;
    }

    std::ofstream sink;
    try {
        sink = open_output(args.out);
    } catch (const std::exception& e) {
        err << "annotate: " << e.what() << '\n';
        return kExitUsage;
    }

    std::size_t written = 0;
    for (const auto& file : files) {
        const std::string id = file.stem().string();
        const auto found = alignments.find(id);
        const AlignmentEntry entry = found != alignments.end() ? found->second : AlignmentEntry{};
        try {
            dsp::AudioBuffer audio;
            try {
                audio = read_wav(file);
            } catch (const WavError& e) {
                throw prosody::StageError("read", e.what());
            }
            const auto annotation =
                prosody::annotate(audio, entry.transcript, entry.words, entry.speaker_traits, settings.analysis);
            sink << annotation_json(id, annotation) << '\n';
            ++written;
        } catch (const prosody::StageError& e) {
            err << id << ": skipped at stage " << e.what() << '\n';
        } catch (const std::exception& e) {
            err << id << ": skipped: " << e.what() << '\n';
        }
    }
    out << "annotated " << written << " of " << files.size() << " file(s)\n";
    return written > 0 ? kExitOk : kExitNoOutput;
}

std::string default_group_key(const std::string& id) {
    const auto hash = id.rfind('#');
    return hash == std::string::npos ? id : id.substr(0, hash);
}

int cmd_score(const ScoreArgs& args, std::ostream& out, std::ostream& err) {
    if (args.gate != "open" && args.gate != "closed") {
        err << "score: --gate must be 'open' or 'closed'\n";
        return kExitUsage;
    }
    reward::GroupOptions options;
    try {
        if (args.weights.size() != 4) {
            throw std::invalid_argument("--weights needs exactly 4 values");
        }
        options.weights = reward::ReasoningWeights({args.weights[0], args.weights[1], args.weights[2], args.weights[3]});
        options.alpha = reward::RewardWeights{args.alpha_f, args.alpha_o, args.alpha_t};
        options.alpha.validate();
    } catch (const std::exception& e) {
        err << "score: " << e.what() << '\n';
        return kExitUsage;
    }

    std::vector<ScoringRecord> records;
    try {
        std::ifstream in(args.responses);
        if (!in) {
            throw std::runtime_error("cannot read " + args.responses);
        }
        records = read_scoring_records(in);
    } catch (const std::exception& e) {
        err << "score: " << e.what() << '\n';
        return kExitUsage;
    }

    std::vector<std::string> order;
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < records.size(); ++i) {
        std::string key;
        if (args.group_by == "id-prefix") {
            key = default_group_key(records[i].id);
        } else {
            const auto it = records[i].extra.find(args.group_by);
            if (it == records[i].extra.end()) {
                err << "score: line " << records[i].line << ": missing group field '" << args.group_by << "'\n";
                return kExitUsage;
            }
            key = it->second;
        }
        auto [slot, inserted] = groups.try_emplace(key);
        if (inserted) {
            order.push_back(key);
        } else if (records[slot->second.front()].gold != records[i].gold) {
            err << "score: line " << records[i].line << ": gold_label differs within group '" << key << "'\n";
            return kExitUsage;
        }
        slot->second.push_back(i);
    }

    std::vector<ScoredRow> rows(records.size());
    const bool gate_open = args.gate == "open";
    for (const auto& key : order) {
        const auto& members = groups.at(key);
        std::vector<std::string> responses;
        std::vector<std::optional<reward::CriterionScores>> scores;
        for (std::size_t i : members) {
            responses.push_back(records[i].response);
            scores.push_back(records[i].criterion_scores);
        }
        const auto group = reward::score_group(records[members.front()].gold, responses, scores, options, gate_open);
        for (std::size_t m = 0; m < members.size(); ++m) {
            const auto& r = group.records[m];
            rows[members[m]] = ScoredRow{records[members[m]].id, r.format, r.outcome, r.reasoning, group.tau_applied,
                                         r.composite};
        }
    }

    try {
        auto sink = open_output(args.out);
        for (const auto& row : rows) {
            sink << scored_json(row) << '\n';
        }
    } catch (const std::exception& e) {
        err << "score: " << e.what() << '\n';
        return kExitUsage;
    }
    out << "scored " << rows.size() << " response(s) in " << order.size() << " group(s)\n";
    return kExitOk;
}

std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : "none"; }

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
    toyenv::TrainConfig config;
    try {
        if (!args.config.empty()) {
            config = load_settings(args.config).train;
        }
        if (args.seed) {
            config.seed = *args.seed;
        }
        config.validate();
    } catch (const toyenv::ConfigError& e) {
        err << "train: invalid config key '" << e.key() << "': " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "train: " << e.what() << '\n';
        return kExitUsage;
    }

    std::ofstream sink;
    try {
        sink = open_output(args.out);
    } catch (const std::exception& e) {
        err << "train: " << e.what() << '\n';
        return kExitUsage;
    }
    const auto result = toyenv::run_training(config);
    write_metrics_csv(sink, result.metrics);

    const auto& s = result.summary;
    out << "final_window_accuracy " << format_number(s.final_window_accuracy) << '\n';
    out << "gate_open_step " << (s.gate_open_step ? std::to_string(*s.gate_open_step) : "none") << '\n';
    out << "mean_tau_post_gate " << optional_number(s.mean_tau_post_gate) << '\n';
    out << "final_fidelity " << format_number(s.final_fidelity) << '\n';
    return kExitOk;
}

int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err) {
    struct Line {
        std::string name;
        double accuracy;
        std::optional<std::size_t> gate_step;
        double mean_reward;
    };
    std::vector<Line> lines;
    for (const auto& path : args.metrics) {
        std::ifstream in(path);
        if (!in) {
            err << "report: cannot read " << path << '\n';
            return kExitUsage;
        }
        std::vector<toyenv::MetricsRow> rows;
        try {
            rows = read_metrics_csv(in);
        } catch (const std::exception& e) {
            err << "report: " << path << ": " << e.what() << '\n';
            return kExitUsage;
        }
        if (rows.empty()) {
            err << "report: " << path << ": no data rows\n";
            return kExitUsage;
        }
        const auto summary = toyenv::summarize(rows, args.window);
        double reward_sum = 0.0;
        for (const auto& r : rows) {
            reward_sum += r.mean_reward;
        }
        lines.push_back({path, summary.final_window_accuracy, summary.gate_open_step,
                         reward_sum / static_cast<double>(rows.size())});
    }

    std::size_t width = 4;
    for (const auto& l : lines) {
        width = std::max(width, l.name.size());
    }
    out << std::left << std::setw(static_cast<int>(width)) << "file" << "  " << std::right << std::setw(10)
        << "final_acc" << "  " << std::setw(10) << "gate_step" << "  " << std::setw(11) << "mean_reward" << '\n';
    out << std::fixed << std::setprecision(4);
    for (const auto& l : lines) {
        out << std::left << std::setw(static_cast<int>(width)) << l.name << "  " << std::right << std::setw(10)
            << l.accuracy << "  " << std::setw(10) << (l.gate_step ? std::to_string(*l.gate_step) : "-") << "  "
            << std::setw(11) << l.mean_reward << '\n';
    }
    if (lines.size() == 2) {
        out << std::left << std::setw(static_cast<int>(width)) << "diff" << "  " << std::right << std::setw(10)
            << std::showpos << (lines[1].accuracy - lines[0].accuracy) << std::noshowpos << '\n';
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Prosody annotation and reward-shaped policy optimization toolkit", "ptrlab"};
    app.require_subcommand(1);

    AnnotateArgs annotate;
    auto* annotate_cmd = app.add_subcommand("annotate", "Annotate WAV files with prosody labels (JSONL)");
    annotate_cmd->add_option("--input", annotate.input, "WAV file or directory of WAV files")->required();
    annotate_cmd->add_option("--alignments", annotate.alignments, "Word alignments JSONL keyed by id");
    annotate_cmd->add_option("--out", annotate.out, "Output JSONL")->required();
    annotate_cmd->add_option("--config", annotate.config, "key = value config file");

    ScoreArgs score;
    auto* score_cmd = app.add_subcommand("score", "Score response groups offline (JSONL)");
    score_cmd->add_option("--responses", score.responses, "Input JSONL")->required();
    score_cmd->add_option("--out", score.out, "Output JSONL")->required();
    score_cmd->add_option("--alpha-f", score.alpha_f, "Format reward weight")->capture_default_str();
    score_cmd->add_option("--alpha-o", score.alpha_o, "Outcome reward weight")->capture_default_str();
    score_cmd->add_option("--alpha-t", score.alpha_t, "Reasoning reward weight")->capture_default_str();
    score_cmd->add_option("--weights", score.weights, "Criterion weights w1,w2,w3,w4")->delimiter(',')->expected(4);
    score_cmd->add_option("--gate", score.gate, "Reasoning gate: open or closed")->capture_default_str();
    score_cmd->add_option("--group-by", score.group_by, "Group key field, or id-prefix")->capture_default_str();

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Train the toy policy and write per-step metrics (CSV)");
    train_cmd->add_option("--config", train.config, "key = value config file");
    train_cmd->add_option("--seed", train.seed, "Overrides the config seed");
    train_cmd->add_option("--out", train.out, "Output CSV")->required();

    ReportArgs report;
    auto* report_cmd = app.add_subcommand("report", "Summarize metrics CSVs");
    report_cmd->add_option("--metrics", report.metrics, "Metrics CSV files")->required()->expected(1, -1);
    report_cmd->add_option("--window", report.window, "Final-window length")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    if (annotate_cmd->parsed()) {
        return cmd_annotate(annotate, out, err);
    }
    if (score_cmd->parsed()) {
        return cmd_score(score, out, err);
    }
    if (train_cmd->parsed()) {
        return cmd_train(train, out, err);
    }
    return cmd_report(report, out, err);
}

}  // namespace ptrlab::cli
