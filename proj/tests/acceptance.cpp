// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>

#include "ptrlab/dsp.hpp"
#include "ptrlab/grpo.hpp"
#include "ptrlab/reward.hpp"
#include "ptrlab/toyenv.hpp"
#include "support/format_corpus.hpp"
#include "support/properties.hpp"
#include "support/signals.hpp"
#include "support/toy_batch.hpp"
#include "wav.hpp"

using namespace ptrlab;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
    return buf;
}

Verdict reward_algebra() {
    const double rt = reward::reasoning_reward(reward::CriterionScores(3, 4, 2, 5), reward::ReasoningWeights::uniform());
    const std::vector<reward::OutcomeReasoning> group = {{1, 0.4}, {0, 0.6}};
    const double tau = reward::trust_weight(group).tau;
    const double ri = reward::composite_reward(1, 1, 0.7, 1.0, reward::RewardWeights{}, true);
    const bool ok = std::abs(rt - 0.7) <= 1e-6 && std::abs(tau - 0.818731) <= 1e-6 && std::abs(ri - 1.65) <= 1e-6;
    return {ok, fmt("R_t=%.9f tau=%.9f R_i=%.9f", rt, tau, ri)};
}

Verdict tau_and_gate() {
    constexpr std::size_t n = 10000;
    const auto tau = fixtures::tau_properties(101, n);
    const auto gate = fixtures::gate_properties(102, n);
    const auto closed = fixtures::closed_gate_properties(103, n);

    // The same holds in training: no reasoning term is added before the gate opens.
    toyenv::TrainConfig config;
    config.steps = 300;
    const auto run = toyenv::run_training(config);
    bool pre_gate_zero = true;
    bool monotone = true;
    for (std::size_t i = 0; i < run.metrics.size(); ++i) {
        const auto& row = run.metrics[i];
        pre_gate_zero = pre_gate_zero && (row.gate_open || row.reasoning_term == 0.0);
        monotone = monotone && (i == 0 || !run.metrics[i - 1].gate_open || row.gate_open);
    }
    std::string detail = std::to_string(tau.cases + gate.cases + closed.cases) + " cases";
    for (const auto* r : {&tau, &gate, &closed}) {
        if (!r->ok()) {
            detail += "; " + *r->counterexample;
        }
    }
    if (!pre_gate_zero) {
        detail += "; reasoning term before the gate opened in training";
    }
    if (!monotone) {
        detail += "; training gate closed again";
    }
    const bool ok = tau.ok() && gate.ok() && closed.ok() && pre_gate_zero && monotone && tau.cases >= n &&
                    gate.cases >= n && closed.cases >= n;
    return {ok, detail};
}

Verdict advantages() {
    const auto r = fixtures::advantage_properties(104, 10000);
    return {r.ok() && r.cases >= 10000,
            std::to_string(r.cases) + " groups" + (r.ok() ? "" : "; " + *r.counterexample)};
}

Verdict gradients() {
    const auto table = toyenv::PrototypeTable::reference(4);
    double worst = 0.0;
    std::size_t probes = 0;
    std::uint64_t seed = 40;
    for (double psi : {-1.5, 0.0, 1.8}) {
        const auto params = fixtures::random_params(4, psi, seed++);
        const auto reference = fixtures::random_params(4, psi - 0.3, seed++, 0.5);
        const auto groups = fixtures::sample_groups(params, table, 4, 8, seed++);
        const auto report = fixtures::check_batch_gradient(params, reference, groups, 0.04, 24, seed++);
        worst = std::max(worst, report.max_relative_error);
        probes += report.probes.size();
    }
    return {worst <= 1e-4 && probes >= 60, fmt("max relative error %.3g over %.0f probes", worst, probes)};
}

Verdict dsp_oracles() {
    const auto kernel = dsp::savgol_coefficients(5, 2);
    const double expected[5] = {-3.0 / 35, 12.0 / 35, 17.0 / 35, 12.0 / 35, -3.0 / 35};
    double kernel_err = 0.0;
    for (int i = 0; i < 5; ++i) {
        kernel_err = std::max(kernel_err, std::abs(kernel[static_cast<std::size_t>(i)] - expected[i]));
    }

    std::vector<double> quad(40);
    for (std::size_t i = 0; i < quad.size(); ++i) {
        const double x = static_cast<double>(i);
        quad[i] = 0.5 * x * x - 3.0 * x + 2.0;
    }
    const auto smooth = dsp::savgol_smooth(quad, 5, 2);
    double quad_err = 0.0;
    for (std::size_t i = 2; i + 2 < quad.size(); ++i) {
        quad_err = std::max(quad_err, std::abs(smooth[i] - quad[i]));
    }

    double pitch_err = 0.0;
    bool all_voiced = true;
    const dsp::PitchSettings settings;
    for (int hz = 80; hz <= 400; hz += 5) {
        const auto audio = fixtures::tone(hz, 0.3);
        const auto frames = dsp::frame_signal(audio, 40.0, 10.0);
        const auto track = dsp::track_pitch(frames, audio.sample_rate, settings);
        for (const auto& f0 : track.f0_hz) {
            if (!f0) {
                all_voiced = false;
                continue;
            }
            pitch_err = std::max(pitch_err, std::abs(*f0 - hz) / hz);
        }
    }

    const auto sine = fixtures::tone(200.0, 1.0, 16000.0, 1.0);
    const double rms_err = std::abs(dsp::rms_energy(sine.samples) - 1.0 / std::numbers::sqrt2);

    const bool ok = kernel_err <= 1e-9 && quad_err <= 1e-9 && all_voiced && pitch_err <= 0.02 && rms_err <= 1e-4;
    return {ok, fmt("kernel %.2g, quadratic %.2g, pitch %.3f%%, rms %.2g", kernel_err, quad_err, 100.0 * pitch_err,
                    rms_err)};
}

Verdict convergence() {
    const auto run = toyenv::run_training(toyenv::TrainConfig{});
    const auto& s = run.summary;
    const bool ok = s.final_window_accuracy >= 0.90 && s.gate_open_step && *s.gate_open_step < 1000;
    return {ok, fmt("final accuracy %.4f, gate opened at step %.0f", s.final_window_accuracy,
                    s.gate_open_step ? static_cast<double>(*s.gate_open_step) : -1.0)};
}

Verdict trust_ablation() {
    int holds = 0;
    bool tau_shrinks = true;
    bool clean_tau = true;
    std::ostringstream detail;
    detail.precision(4);
    detail << std::fixed;
    for (std::uint64_t seed : {0, 1, 2}) {
        toyenv::TrainConfig on;
        on.seed = seed;
        on.adversarial = true;
        toyenv::TrainConfig off = on;
        off.trust_enabled = false;
        toyenv::TrainConfig clean;
        clean.seed = seed;
        const auto a = toyenv::run_training(on).summary;
        const auto b = toyenv::run_training(off).summary;
        const auto c = toyenv::run_training(clean).summary;
        holds += a.final_window_accuracy >= b.final_window_accuracy ? 1 : 0;
        tau_shrinks = tau_shrinks && a.mean_tau_post_gate && *a.mean_tau_post_gate < 1.0;
        clean_tau = clean_tau && c.mean_tau_post_gate && *c.mean_tau_post_gate >= 0.95;
        detail << "seed " << seed << ": on " << a.final_window_accuracy << " off " << b.final_window_accuracy
               << " tau " << a.mean_tau_post_gate.value_or(NAN) << " clean tau " << c.mean_tau_post_gate.value_or(NAN)
               << "; ";
    }
    detail << holds << "/3 pairs";
    return {holds >= 2 && tau_shrinks && clean_tau, detail.str()};
}

Verdict schedule_ablation() {
    int holds = 0;
    std::ostringstream detail;
    detail.precision(4);
    detail << std::fixed;
    for (std::uint64_t seed : {0, 1, 2}) {
        toyenv::TrainConfig progressive;
        progressive.seed = seed;
        toyenv::TrainConfig forced = progressive;
        forced.progressive = false;
        const double p = toyenv::run_training(progressive).summary.final_window_accuracy;
        const double f = toyenv::run_training(forced).summary.final_window_accuracy;
        holds += f <= p ? 1 : 0;
        detail << "seed " << seed << ": progressive " << p << " forced " << f << "; ";
    }
    detail << holds << "/3 pairs";
    return {holds >= 2, detail.str()};
}

int shell(const std::string& command) {
    const int status = std::system((command + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict determinism() {
    fixtures::ScratchDir dir;
    const std::string exe = PTRLAB_CLI_PATH;
    const auto wavs = dir / "wavs";
    std::filesystem::create_directories(wavs);
    cli::write_wav(wavs / "chirp_up.wav", fixtures::glide({140.0, 280.0}, 1.2), cli::WavEncoding::Pcm16);
    cli::write_wav(wavs / "chirp_down.wav", fixtures::glide({300.0, 150.0}, 1.0), cli::WavEncoding::Pcm16);
    cli::write_wav(wavs / "hat.wav", fixtures::glide({150.0, 260.0, 140.0}, 1.4), cli::WavEncoding::Float32);
    cli::write_wav(wavs / "steady.wav",
                   fixtures::concat({fixtures::tone(180.0, 0.5), fixtures::silence(0.2), fixtures::tone(190.0, 0.5, 16000.0, 0.2)}),
                   cli::WavEncoding::Pcm16);
    fixtures::spit(dir / "align.jsonl",
                   R"({"id": "chirp_up", "words": [{"word": "are", "t_start": 0.1, "t_end": 0.5}, {"word": "you", "t_start": 0.6, "t_end": 1.1}]})"
                   "\n"
                   R"({"id": "steady", "words": [{"word": "fine", "t_start": 0.05, "t_end": 0.45}, {"word": "thanks", "t_start": 0.75, "t_end": 1.15}], "speaker_traits": {"gender": "female", "age_group": null}})"
                   "\n");

    std::string failure;
    for (const char* name : {"a", "b"}) {
        if (shell(exe + " train --seed 3 --out " + (dir / (std::string(name) + ".csv")).string()) != 0) {
            failure += " train failed;";
        }
        if (shell(exe + " annotate --input " + wavs.string() + " --alignments " + (dir / "align.jsonl").string() +
                  " --out " + (dir / (std::string(name) + ".jsonl")).string()) != 0) {
            failure += " annotate failed;";
        }
    }
    const auto csv = fixtures::slurp(dir / "a.csv");
    const auto jsonl = fixtures::slurp(dir / "a.jsonl");
    const bool same_csv = !csv.empty() && csv == fixtures::slurp(dir / "b.csv");
    const bool same_jsonl = !jsonl.empty() && jsonl == fixtures::slurp(dir / "b.jsonl");
    const auto lines = std::count(jsonl.begin(), jsonl.end(), '\n');
    const bool ok = failure.empty() && same_csv && same_jsonl && lines == 4;
    return {ok, std::to_string(csv.size()) + " CSV bytes, " + std::to_string(lines) + " annotations" +
                    (same_csv ? "" : "; CSVs differ") + (same_jsonl ? "" : "; JSONL differs") + failure};
}

Verdict format_corpus() {
    std::size_t agree = 0;
    std::string mismatches;
    for (std::size_t i = 0; i < fixtures::kFormatCorpus.size(); ++i) {
        const auto& c = fixtures::kFormatCorpus[i];
        if (reward::format_reward(c.text) == c.expected) {
            ++agree;
        } else {
            mismatches += " #" + std::to_string(i) + "(" + std::string(c.kind) + ")";
        }
    }
    return {agree == 30, std::to_string(agree) + "/30 match" + mismatches};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Verdict()> check;
        double budget_s;
    };
    const Criterion criteria[] = {
        {1, "reward algebra", reward_algebra, 1.0},
        {2, "trust weight and gate properties", tau_and_gate, 60.0},
        {3, "advantage normalization", advantages, 60.0},
        {4, "gradient check", gradients, 10.0},
        {5, "dsp oracles", dsp_oracles, 10.0},
        {6, "toy convergence", convergence, 120.0},
        {7, "trust ablation direction", trust_ablation, 600.0},
        {8, "progressive schedule ablation direction", schedule_ablation, 600.0},
        {9, "end-to-end determinism", determinism, 300.0},
        {10, "format reward corpus", format_corpus, 1.0},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (elapsed > c.budget_s) {
            v.pass = false;
            v.detail += fmt("; over the %.0f s budget", c.budget_s);
        }
        failures += v.pass ? 0 : 1;
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.name << " (" << v.detail
                  << fmt(", %.2f s)", elapsed) << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
