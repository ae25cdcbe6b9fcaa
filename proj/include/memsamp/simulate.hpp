#pragma once

#include <charconv>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "model.hpp"
#include "solver.hpp"
#include "stats.hpp"

// Slot-level simulation of the writer/reader chain. All randomness comes
// from one seedable std::mt19937_64 per run; every slot consumes exactly one
// uniform draw for the writer's coin, with the policy evaluated before the
// draw, so runs are bit-reproducible for a given seed within a build.

namespace memsamp {

struct ThresholdPolicy {
    std::int64_t threshold;  // sample when the age gap y - x reaches this
};
struct AlwaysSamplePolicy {};
struct NeverSamplePolicy {};
struct PeriodicPolicy {
    std::int64_t period;  // sample on every period-th slot, 1-indexed
};
struct TablePolicy {
    PolicyTable table;  // off-grid states clamp onto the grid
};

using PolicySpec = std::variant<ThresholdPolicy, AlwaysSamplePolicy,
                                NeverSamplePolicy, PeriodicPolicy, TablePolicy>;

/// Action a policy takes at state s in slot t (slots count from zero).
inline Action policy_action(const PolicySpec& policy, const AgeState& s,
                            std::int64_t t) {
    struct Visitor {
        const AgeState& s;
        std::int64_t t;
        Action operator()(const ThresholdPolicy& p) const {
            return (s.y - s.x) >= p.threshold ? Action::Sample : Action::Idle;
        }
        Action operator()(const AlwaysSamplePolicy&) const { return Action::Sample; }
        Action operator()(const NeverSamplePolicy&) const { return Action::Idle; }
        Action operator()(const PeriodicPolicy& p) const {
            return (t + 1) % p.period == 0 ? Action::Sample : Action::Idle;
        }
        Action operator()(const TablePolicy& p) const {
            return p.table.at(p.table.grid().clamp(s));
        }
    };
    return std::visit(Visitor{s, t}, policy);
}

/// Parse the CLI policy grammar: threshold:<int> | always | never |
/// periodic:<int>.
inline PolicySpec parse_policy(const std::string& text) {
    auto integer_suffix = [&](std::size_t prefix_len) {
        std::int64_t value = 0;
        const char* first = text.data() + prefix_len;
        const char* last = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc{} || ptr != last || value < 1)
            throw std::invalid_argument("policy parameter must be a positive integer");
        return value;
    };
    if (text == "always") return AlwaysSamplePolicy{};
    if (text == "never") return NeverSamplePolicy{};
    if (text.rfind("threshold:", 0) == 0)
        return ThresholdPolicy{integer_suffix(10)};
    if (text.rfind("periodic:", 0) == 0)
        return PeriodicPolicy{integer_suffix(9)};
    throw std::invalid_argument(
        "unknown policy '" + text +
        "' (expected threshold:<int>, always, never, or periodic:<int>)");
}

/// Round-trip label for a policy, matching the parse grammar.
inline std::string policy_label(const PolicySpec& policy) {
    struct Visitor {
        std::string operator()(const ThresholdPolicy& p) const {
            return "threshold:" + std::to_string(p.threshold);
        }
        std::string operator()(const AlwaysSamplePolicy&) const { return "always"; }
        std::string operator()(const NeverSamplePolicy&) const { return "never"; }
        std::string operator()(const PeriodicPolicy& p) const {
            return "periodic:" + std::to_string(p.period);
        }
        std::string operator()(const TablePolicy&) const { return "table"; }
    };
    return std::visit(Visitor{}, policy);
}

/// Simulation run settings. The post-warmup stretch must split evenly into
/// the requested number of batches.
struct SimConfig {
    std::int64_t slots = 1000000;
    std::int64_t warmup = 10000;
    std::uint64_t seed = 1;
    std::int64_t batches = 30;
};

inline void validate(const SimConfig& config) {
    if (config.slots < 1)
        throw std::invalid_argument("slot count must be positive");
    if (config.warmup < 0 || config.warmup >= config.slots)
        throw std::invalid_argument("warmup must satisfy 0 <= warmup < slots");
    if (config.batches < 2)
        throw std::invalid_argument("need at least two batches");
    if ((config.slots - config.warmup) % config.batches != 0)
        throw std::invalid_argument(
            "batches must divide the post-warmup slot count");
}

/// Point estimates from one simulation run, all over post-warmup slots.
/// ci_halfwidth is the 95% batch-means interval for mean_cost.
struct SimEstimate {
    double mean_cost = 0.0;
    double ci_halfwidth = 0.0;
    double mean_age = 0.0;
    double sample_rate = 0.0;
    std::uint64_t seed = 0;
    bool age_divergent = false;  // set for policies that never sample
};

namespace detail {

// Canonical uniform in [0,1): top 53 bits of the engine output. Spelled out
// rather than using a distribution so the mapping is fixed across library
// implementations.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Advance one slot: the write branch of the law is always stored first.
inline AgeState step(const AgeState& s, Action a, const ModelParams& model,
                     std::mt19937_64& rng) {
    const TransitionLaw law = transition(s, a, model);
    const double u = uniform01(rng);
    return (u < law.branch[0].prob || law.count == 1) ? law.branch[0].next
                                                      : law.branch[1].next;
}

}  // namespace detail

/// Run the chain from the reset state (0,1) and estimate the long-run cost
/// of a policy by batch means.
inline SimEstimate simulate(const ModelParams& model, const PolicySpec& policy,
                            const SimConfig& config) {
    validate(config);
    std::mt19937_64 rng(config.seed);
    const std::int64_t batch_len = (config.slots - config.warmup) / config.batches;

    SampleStats batches;
    double batch_sum = 0.0;
    std::int64_t in_batch = 0;
    double age_sum = 0.0;
    std::int64_t samples = 0;

    AgeState s{0, 1};
    for (std::int64_t t = 0; t < config.slots; ++t) {
        const Action a = policy_action(policy, s, t);
        if (t >= config.warmup) {
            batch_sum += stage_cost(s, a, model);
            age_sum += static_cast<double>(s.y);
            samples += a == Action::Sample ? 1 : 0;
            if (++in_batch == batch_len) {
                batches.add(batch_sum / static_cast<double>(batch_len));
                batch_sum = 0.0;
                in_batch = 0;
            }
        }
        s = detail::step(s, a, model, rng);
    }

    const double measured = static_cast<double>(config.slots - config.warmup);
    SimEstimate estimate;
    estimate.mean_cost = batches.mean();
    estimate.ci_halfwidth = batches.ci_halfwidth();
    estimate.mean_age = age_sum / measured;
    estimate.sample_rate = static_cast<double>(samples) / measured;
    estimate.seed = config.seed;
    estimate.age_divergent = std::holds_alternative<NeverSamplePolicy>(policy);
    return estimate;
}

/// Monte Carlo estimate of the first passage cost to the reset state.
struct FirstPassageEstimate {
    double mean = 0.0;
    double ci_halfwidth = 0.0;
    std::int64_t episodes = 0;  // completed episodes in the estimate
    std::int64_t aborted = 0;   // episodes that hit the slot cap
    std::uint64_t seed = 0;
};

/// Accumulate stage cost along the always-sample chain from a start state
/// until the chain first enters (0,1); episodes run at least one slot, so a
/// start at the reset state measures the first return. Episodes exceeding
/// the slot cap are dropped from the estimate and counted as aborted.
inline FirstPassageEstimate first_passage_monte_carlo(
    const ModelParams& model, const AgeState& start, std::int64_t episodes,
    std::uint64_t seed, std::int64_t slot_cap = 10000000) {
    require_valid(start);
    if (episodes < 1)
        throw std::invalid_argument("episode count must be positive");
    if (slot_cap < 1)
        throw std::invalid_argument("slot cap must be positive");

    std::mt19937_64 rng(seed);
    SampleStats stats;
    FirstPassageEstimate estimate;
    estimate.seed = seed;
    const AgeState target{0, 1};

    for (std::int64_t e = 0; e < episodes; ++e) {
        AgeState s = start;
        double cost = 0.0;
        bool finished = false;
        for (std::int64_t t = 0; t < slot_cap; ++t) {
            cost += stage_cost(s, Action::Sample, model);
            s = detail::step(s, Action::Sample, model, rng);
            if (s == target) {
                finished = true;
                break;
            }
        }
        if (finished) stats.add(cost);
        else ++estimate.aborted;
    }

    estimate.mean = stats.mean();
    estimate.ci_halfwidth = stats.ci_halfwidth();
    estimate.episodes = stats.count();
    return estimate;
}

/// One entry of a parameter sweep: either an estimate or the error that
/// point produced. Errors never abort the rest of the sweep.
struct SweepPointResult {
    std::optional<SimEstimate> estimate;
    std::string error;
};

/// Simulate a list of parameter points with per-point seeds derived from
/// the base seed by XOR with the point index, so results depend only on the
/// point's position, not on execution order.
inline std::vector<SweepPointResult> sweep_simulate(
    const std::vector<ModelParams>& points,
    const std::function<PolicySpec(const ModelParams&)>& policy_for,
    const SimConfig& base) {
    std::vector<SweepPointResult> results;
    results.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        SimConfig config = base;
        config.seed = base.seed ^ static_cast<std::uint64_t>(i);
        try {
            results.push_back({simulate(points[i], policy_for(points[i]), config), {}});
        } catch (const std::exception& err) {
            results.push_back({std::nullopt, err.what()});
        }
    }
    return results;
}

}  // namespace memsamp
