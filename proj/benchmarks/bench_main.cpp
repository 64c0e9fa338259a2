#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ptrlab/dsp.hpp"
#include "ptrlab/prosody.hpp"
#include "ptrlab/reward.hpp"
#include "ptrlab/toyenv.hpp"

using namespace ptrlab;

namespace {

dsp::AudioBuffer chirp(double seconds, double rate = 16000.0) {
    const auto n = static_cast<std::size_t>(seconds * rate);
    dsp::AudioBuffer audio{std::vector<double>(n), rate};
    double phase = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = 120.0 + 150.0 * static_cast<double>(i) / static_cast<double>(n);
        audio.samples[i] = 0.5 * std::sin(phase);
        phase += 2.0 * std::numbers::pi * f / rate;
    }
    return audio;
}

void BM_EstimateF0(benchmark::State& state) {
    const auto audio = chirp(0.1);
    const std::span<const double> frame(audio.samples.data(), static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(dsp::estimate_f0(frame, 16000.0, 80.0, 400.0, 0.5));
    }
}
BENCHMARK(BM_EstimateF0)->Arg(400)->Arg(640)->Arg(1024);

void BM_SavGol(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal;
    std::vector<double> series(static_cast<std::size_t>(state.range(0)));
    for (auto& x : series) {
        x = normal(rng);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(dsp::savgol_smooth(series, 11, 3));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SavGol)->Range(64, 16384);

void BM_Annotate(benchmark::State& state) {
    const auto audio = chirp(static_cast<double>(state.range(0)));
    const prosody::AnalysisConfig config;
    for (auto _ : state) {
        benchmark::DoNotOptimize(prosody::annotate(audio, "one two three", {}, std::nullopt, config));
    }
}
BENCHMARK(BM_Annotate)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ScoreGroup(benchmark::State& state) {
    std::vector<std::string> responses;
    std::vector<std::optional<reward::CriterionScores>> scores;
    for (int i = 0; i < state.range(0); ++i) {
        responses.push_back(std::string("<think>pitch is high, energy is high</think><answer>") +
                            (i % 2 ? "Happy" : "Angry") + "</answer>");
        scores.emplace_back(reward::CriterionScores(1 + i % 5, 2, 3, 4));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(reward::score_group(reward::Emotion::Happy, responses, scores, {}, true));
    }
}
BENCHMARK(BM_ScoreGroup)->Arg(8)->Arg(64);

void BM_TrainingSteps(benchmark::State& state) {
    toyenv::TrainConfig config;
    config.steps = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(toyenv::run_training(config));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainingSteps)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
