#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ptrlab/grpo.hpp"
#include "ptrlab/reward.hpp"

// Randomized property suites shared by the unit tests and the acceptance gate.
namespace ptrlab::fixtures {

struct PropertyResult {
    std::size_t cases = 0;
    std::optional<std::string> counterexample;

    bool ok() const { return !counterexample; }
};

namespace detail {

inline std::string describe(const std::vector<double>& v) {
    std::ostringstream os;
    os.precision(17);
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        os << (i ? ", " : "") << v[i];
    }
    os << ']';
    return os.str();
}

inline std::string reply(bool correct) {
    return correct ? "<think>t</think><answer>Happy</answer>" : "<think>t</think><answer>Sad</answer>";
}

}  // namespace detail

/// Trust weight range and branch rule on random groups of (outcome, reasoning) pairs.
inline PropertyResult tau_properties(std::uint64_t seed, std::size_t cases) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> size(1, 16);
    std::uniform_int_distribution<int> score(1, 5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    PropertyResult out;
    for (; out.cases < cases; ++out.cases) {
        const int n = size(rng);
        const double p_correct = unit(rng);
        const bool continuous = out.cases % 2 == 0;
        std::vector<reward::OutcomeReasoning> group;
        double sum_c = 0.0, sum_w = 0.0;
        int n_c = 0, n_w = 0;
        for (int i = 0; i < n; ++i) {
            const int outcome = unit(rng) < p_correct ? 1 : 0;
            const double rt = continuous ? 0.2 + 0.8 * unit(rng) : score(rng) / 5.0;
            group.push_back({outcome, rt});
            (outcome ? sum_c : sum_w) += rt;
            (outcome ? n_c : n_w) += 1;
        }
        const auto stats = reward::trust_weight(group);
        const double tau = stats.tau;
        const bool either_empty = n_c == 0 || n_w == 0;
        const double mc = n_c ? sum_c / n_c : 0.0;
        const double mw = n_w ? sum_w / n_w : 0.0;
        std::string failure;
        if (!(tau > 0.0 && tau <= 1.0)) {
            failure = "tau outside (0, 1]";
        } else if (either_empty && tau != 1.0) {
            failure = "tau != 1 with an empty partition";
        } else if (!either_empty && mc >= mw + 1e-12 && tau != 1.0) {
            failure = "tau != 1 although correct responses score at least as well";
        } else if (!either_empty && mc < mw - 1e-12 && std::abs(tau - std::exp(mc - mw)) > 1e-12) {
            failure = "tau does not equal exp(mean_c - mean_w)";
        } else if (!either_empty && tau < std::exp(-0.8) - 1e-12) {
            failure = "tau below exp(-0.8)";
        }
        if (!failure.empty()) {
            std::ostringstream os;
            os << failure << " (tau " << tau << ", mean_c " << mc << ", mean_w " << mw << ", n " << n << ")";
            out.counterexample = os.str();
            return out;
        }
    }
    return out;
}

/// Latched gate over arbitrary accuracy streams, checked against a direct recomputation.
inline PropertyResult gate_properties(std::uint64_t seed, std::size_t cases) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> window(1, 30);
    std::uniform_int_distribution<int> length(1, 120);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    PropertyResult out;
    for (; out.cases < cases; ++out.cases) {
        const auto w = static_cast<std::size_t>(window(rng));
        const double threshold = unit(rng);
        const double drift = unit(rng);
        reward::ScheduleState state(w, threshold);
        std::deque<double> recent;
        bool expected_open = false;
        bool previous = false;
        const int n = length(rng);
        for (int i = 0; i < n; ++i) {
            const double a = out.cases % 3 == 0 ? std::round(unit(rng) * 8.0) / 8.0 : std::clamp(drift + 0.3 * (unit(rng) - 0.5), 0.0, 1.0);
            state = reward::update_schedule(state, a);
            recent.push_back(a);
            if (recent.size() > w) {
                recent.pop_front();
            }
            if (!expected_open && recent.size() == w) {
                double sum = 0.0;
                for (double v : recent) {
                    sum += v;
                }
                expected_open = sum / static_cast<double>(w) >= threshold;
            }
            if (previous && !state.gate_open()) {
                out.counterexample = "gate closed again at push " + std::to_string(i);
                return out;
            }
            if (state.gate_open() != expected_open) {
                out.counterexample = "gate state differs from recomputation at push " + std::to_string(i) +
                                     " (window " + std::to_string(w) + ")";
                return out;
            }
            previous = state.gate_open();
        }
    }
    return out;
}

/// With the gate closed, composites carry no reasoning term whatever the criterion scores.
inline PropertyResult closed_gate_properties(std::uint64_t seed, std::size_t cases) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> size(1, 12);
    std::uniform_int_distribution<int> score(1, 5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    PropertyResult out;
    for (; out.cases < cases; ++out.cases) {
        reward::GroupOptions options;
        options.alpha = {unit(rng), unit(rng) * 2.0, unit(rng) * 2.0};
        options.trust_enabled = unit(rng) < 0.5;
        const int n = size(rng);
        std::vector<std::string> responses;
        std::vector<std::optional<reward::CriterionScores>> scores;
        for (int i = 0; i < n; ++i) {
            const double u = unit(rng);
            responses.push_back(u < 0.1 ? "no tags" : detail::reply(u < 0.55));
            if (unit(rng) < 0.8) {
                scores.emplace_back(reward::CriterionScores(score(rng), score(rng), score(rng), score(rng)));
            } else {
                scores.emplace_back();
            }
        }
        const auto g = reward::score_group(reward::Emotion::Happy, responses, scores, options, false);
        if (g.reasoning_term != 0.0) {
            out.counterexample = "non-zero reasoning term with the gate closed";
            return out;
        }
        for (const auto& r : g.records) {
            if (r.composite != options.alpha.alpha_f * r.format + options.alpha.alpha_o * r.outcome) {
                out.counterexample = "closed-gate composite differs from the rule-based sum";
                return out;
            }
        }
    }
    return out;
}

/// Group-normalized advantages: zero mean, unit population spread, zeros when degenerate,
/// unchanged by shifting or positively scaling the rewards.
inline PropertyResult advantage_properties(std::uint64_t seed, std::size_t cases) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> size(2, 16);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    PropertyResult out;
    for (; out.cases < cases; ++out.cases) {
        const auto k = static_cast<std::size_t>(size(rng));
        std::vector<double> r(k);
        const int mode = static_cast<int>(out.cases % 4);
        const double level = 3.0 * unit(rng) - 1.0;
        for (auto& x : r) {
            switch (mode) {
                case 0: x = level; break;                                         // degenerate
                case 1: x = unit(rng) < 0.5 ? 0.3 : 1.3; break;                   // two-valued, like rewards
                case 2: x = std::round(unit(rng) * 20.0) * 0.1; break;            // coarse grid
                default: x = level + 2.0 * unit(rng); break;                      // continuous
            }
        }
        const auto a = grpo::group_advantages(r);
        const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(k);
        double ss = 0.0;
        for (double x : r) {
            ss += (x - mean) * (x - mean);
        }
        const double sd = std::sqrt(ss / static_cast<double>(k));
        auto fail = [&](const std::string& what) {
            out.counterexample = what + " for rewards " + detail::describe(r);
            return out;
        };
        if (sd < 1e-8) {
            if (std::any_of(a.begin(), a.end(), [](double v) { return v != 0.0; })) {
                return fail("non-zero advantage in a degenerate group");
            }
            continue;
        }
        const double am = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(k);
        double ass = 0.0;
        for (double v : a) {
            ass += (v - am) * (v - am);
        }
        if (std::abs(am) > 1e-9) {
            return fail("advantage mean not 0");
        }
        if (std::abs(std::sqrt(ass / static_cast<double>(k)) - 1.0) > 1e-6) {
            return fail("advantage population std not 1");
        }
        const double shift = 20.0 * unit(rng) - 10.0;
        const double scale = 0.1 + 9.9 * unit(rng);
        std::vector<double> shifted(r), scaled(r);
        for (std::size_t i = 0; i < k; ++i) {
            shifted[i] += shift;
            scaled[i] *= scale;
        }
        const auto as = grpo::group_advantages(shifted);
        const auto ac = grpo::group_advantages(scaled);
        for (std::size_t i = 0; i < k; ++i) {
            if (std::abs(as[i] - a[i]) > 1e-6) {
                return fail("shift changed the advantages");
            }
            if (std::abs(ac[i] - a[i]) > 1e-6) {
                return fail("scaling changed the advantages");
            }
        }
    }
    return out;
}

}  // namespace ptrlab::fixtures
