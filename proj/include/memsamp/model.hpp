#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

// Discrete-time model of a writer/reader pair sharing a one-slot memory.
// Each slot the writer commits a fresh update with probability p; the reader
// either idles or pays c to sample the memory. The state tracks two ages at
// the start of a slot: x, the age of the update held in memory, and y, the
// age of the update held by the client. Fresh writes land at the end of a
// slot, so x = 0 means the memory was refreshed in the previous slot.

namespace memsamp {

/// Model parameters. Validated on construction.
struct ModelParams {
    double p;  // per-slot write probability, 0 < p <= 1
    double c;  // per-sample cost, c >= 0

    ModelParams(double update_prob, double sample_cost)
        : p(update_prob), c(sample_cost) {
        if (!(std::isfinite(p) && p > 0.0 && p <= 1.0))
            throw std::invalid_argument("write probability must satisfy 0 < p <= 1");
        if (!(std::isfinite(c) && c >= 0.0))
            throw std::invalid_argument("sample cost must be finite and nonnegative");
    }

    /// Probability that no write happens in a slot.
    double pbar() const { return 1.0 - p; }
};

/// Age pair at the start of a slot. Valid states satisfy 0 <= x <= y, y >= 1;
/// the memory can never hold an older update than the client, because the
/// client's copy was read from the memory.
struct AgeState {
    std::int64_t x = 0;  // memory age
    std::int64_t y = 1;  // client age

    bool operator==(const AgeState&) const = default;
};

inline bool is_valid(const AgeState& s) {
    return s.x >= 0 && s.y >= 1 && s.x <= s.y;
}

inline void require_valid(const AgeState& s) {
    if (!is_valid(s))
        throw std::invalid_argument("age state must satisfy 0 <= x <= y, y >= 1");
}

enum class Action : int { Idle = 0, Sample = 1 };

/// One-step distribution over successor states. At most two branches: the
/// write branch (probability p) and the no-write branch (probability 1-p);
/// a zero-probability branch is omitted rather than stored.
struct TransitionLaw {
    struct Branch {
        AgeState next;
        double prob;
    };

    std::array<Branch, 2> branch{};
    int count = 0;

    const Branch* begin() const { return branch.data(); }
    const Branch* end() const { return branch.data() + count; }

    void add(const AgeState& next, double prob) {
        if (prob > 0.0) branch[static_cast<std::size_t>(count++)] = {next, prob};
    }
};

/// One-step transition law of the slotted chain.
///
/// Sampling hands the client the update currently in memory, so the client
/// age next slot is x+1 regardless of the writer's coin; the coin only
/// decides whether the memory restarts at age 0. Idling leaves the client
/// aging, y -> y+1.
/// \param s     state at the start of the slot, 0 <= x <= y
/// \param a     reader action for the slot
/// \param model parameters
/// \return branch list summing to exactly 1
inline TransitionLaw transition(const AgeState& s, Action a, const ModelParams& model) {
    require_valid(s);
    TransitionLaw law;
    if (a == Action::Sample) {
        law.add({0, s.x + 1}, model.p);
        law.add({s.x + 1, s.x + 1}, model.pbar());
    } else {
        law.add({0, s.y + 1}, model.p);
        law.add({s.x + 1, s.y + 1}, model.pbar());
    }
    return law;
}

/// Cost accrued in one slot: the client's age plus the sampling fee if any.
inline double stage_cost(const AgeState& s, Action a, const ModelParams& model) {
    require_valid(s);
    return static_cast<double>(s.y) + (a == Action::Sample ? model.c : 0.0);
}

/// Membership in the recurrent class of the threshold policy with the given
/// threshold: the whole memory-fresh axis, plus every off-axis state whose
/// age gap y - x has not yet reached the threshold.
/// \param threshold sampling threshold, >= 1
inline bool is_feasible_under_threshold(const AgeState& s, std::int64_t threshold) {
    require_valid(s);
    if (threshold < 1)
        throw std::invalid_argument("threshold must be a positive integer");
    return s.x == 0 || (s.y - s.x) < threshold;
}

}  // namespace memsamp
