#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "closed_form.hpp"
#include "model.hpp"

// Grid solvers for the sampling model: discounted value iteration and
// relative value iteration on a truncated age grid, plus the structural
// checks that certify the solved tables (monotonicity, threshold rows,
// concavity, diagonal action propagation) and the vanishing-discount
// comparison between the two solvers.

namespace memsamp {

/// Truncated state grid {(x, y) : 0 <= x <= x_max, max(x,1) <= y <= y_max}.
/// Transitions leaving the grid saturate: ages clamp at the caps instead of
/// leaving, so the truncated chain stays stochastic.
class GridSpec {
public:
    GridSpec(std::int64_t x_max, std::int64_t y_max)
        : x_max_(x_max), y_max_(y_max) {
        if (x_max_ < 1 || y_max_ < x_max_)
            throw std::invalid_argument("grid needs 1 <= x_max <= y_max");
        offsets_.resize(static_cast<std::size_t>(x_max_) + 2, 0);
        for (std::int64_t x = 0; x <= x_max_; ++x)
            offsets_[static_cast<std::size_t>(x) + 1] =
                offsets_[static_cast<std::size_t>(x)] + (y_max_ - y_lo(x) + 1);
    }

    /// Grid sized for one parameter point. The y cap keeps an ample margin
    /// above the optimal threshold: the stationary weight of ages k above
    /// the threshold decays like (1-p)^k, so the margin grows as p shrinks
    /// to keep the truncation bias on the gain well below solver tolerance.
    static GridSpec sized_for(const ModelParams& model) {
        const std::int64_t y0 = std::max<std::int64_t>(optimal_threshold(model).y0_star, 1);
        std::int64_t cap = std::max<std::int64_t>(8 * y0, 64);
        if (model.p < 1.0) {
            const double tail =
                std::ceil(std::log(1e-6) / std::log(model.pbar()));
            cap = std::max(cap, y0 + static_cast<std::int64_t>(tail));
        }
        return GridSpec(cap, cap);
    }

    std::int64_t x_max() const { return x_max_; }
    std::int64_t y_max() const { return y_max_; }
    std::int64_t y_lo(std::int64_t x) const { return std::max<std::int64_t>(x, 1); }
    std::int64_t size() const { return offsets_.back(); }

    bool contains(const AgeState& s) const {
        return s.x >= 0 && s.x <= x_max_ && s.y >= y_lo(s.x) && s.y <= y_max_;
    }

    std::int64_t index(const AgeState& s) const {
        return offsets_[static_cast<std::size_t>(s.x)] + (s.y - y_lo(s.x));
    }

    /// Saturation map: project a successor back onto the grid.
    AgeState clamp(const AgeState& s) const {
        return {std::min(s.x, x_max_), std::min(s.y, y_max_)};
    }

    bool operator==(const GridSpec& other) const {
        return x_max_ == other.x_max_ && y_max_ == other.y_max_;
    }

private:
    std::int64_t x_max_;
    std::int64_t y_max_;
    std::vector<std::int64_t> offsets_;
};

/// Dense real-valued function on a grid.
class ValueTable {
public:
    explicit ValueTable(const GridSpec& grid, double fill = 0.0)
        : grid_(grid), v_(static_cast<std::size_t>(grid.size()), fill) {}

    const GridSpec& grid() const { return grid_; }
    double at(const AgeState& s) const { return v_[static_cast<std::size_t>(grid_.index(s))]; }
    double& at(const AgeState& s) { return v_[static_cast<std::size_t>(grid_.index(s))]; }

private:
    GridSpec grid_;
    std::vector<double> v_;
};

/// Dense action-valued function on a grid.
class PolicyTable {
public:
    explicit PolicyTable(const GridSpec& grid, Action fill = Action::Idle)
        : grid_(grid), a_(static_cast<std::size_t>(grid.size()), fill) {}

    const GridSpec& grid() const { return grid_; }
    Action at(const AgeState& s) const { return a_[static_cast<std::size_t>(grid_.index(s))]; }
    Action& at(const AgeState& s) { return a_[static_cast<std::size_t>(grid_.index(s))]; }

private:
    GridSpec grid_;
    std::vector<Action> a_;
};

namespace detail {

// One Bellman backup at state s against the table v, optionally discounted.
// Returns the better continuation and the greedy action, sampling on ties.
// The tie test carries a small tolerance: states that are indifferent in
// exact arithmetic land a few ulps apart after iteration, and resolving all
// of them to Sample keeps tied regions uniform instead of speckled.
struct Backup {
    double value;
    Action action;
};

inline constexpr double kActionTieEps = 1e-9;

inline Backup bellman_backup(const AgeState& s, const ValueTable& v,
                             const ModelParams& model, double alpha) {
    double rhs[2];
    for (Action a : {Action::Idle, Action::Sample}) {
        double acc = stage_cost(s, a, model);
        for (const auto& br : transition(s, a, model))
            acc += alpha * br.prob * v.at(v.grid().clamp(br.next));
        rhs[static_cast<int>(a)] = acc;
    }
    const bool sample = rhs[1] <= rhs[0] + kActionTieEps;
    return {std::min(rhs[0], rhs[1]), sample ? Action::Sample : Action::Idle};
}

template <typename Fn>
inline void for_each_state(const GridSpec& grid, Fn&& fn) {
    for (std::int64_t x = 0; x <= grid.x_max(); ++x)
        for (std::int64_t y = grid.y_lo(x); y <= grid.y_max(); ++y)
            fn(AgeState{x, y});
}

}  // namespace detail

struct DiscountedSolveResult {
    ValueTable value;
    PolicyTable policy;
    std::int64_t iterations = 0;
    double sup_diff_at_stop = 0.0;
    bool converged = false;
};

/// Observer invoked with each completed iterate; lets callers audit the
/// iteration trajectory (for instance its pointwise monotonicity) without
/// the solver storing every sweep.
using IterateObserver = std::function<void(std::int64_t, const ValueTable&)>;

/// Discounted value iteration with Jacobi sweeps from the zero function.
/// Stops when the sup-norm step falls below tol*(1-alpha)/(2*alpha), the
/// classical guarantee that the greedy policy is within tol of optimal.
/// Non-convergence within max_iters is reported, not thrown.
inline DiscountedSolveResult discounted_value_iteration(
    const ModelParams& model, const GridSpec& grid, double alpha,
    double tol = 1e-8, std::int64_t max_iters = 200000,
    const IterateObserver& observer = {}) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("discount factor must lie in (0,1)");
    if (!(tol > 0.0))
        throw std::invalid_argument("tolerance must be positive");
    if (max_iters < 1)
        throw std::invalid_argument("iteration budget must be positive");

    const double stop = tol * (1.0 - alpha) / (2.0 * alpha);
    DiscountedSolveResult result{ValueTable(grid), PolicyTable(grid)};
    ValueTable next(grid);

    for (std::int64_t n = 1; n <= max_iters; ++n) {
        double diff = 0.0;
        detail::for_each_state(grid, [&](const AgeState& s) {
            const double updated =
                detail::bellman_backup(s, result.value, model, alpha).value;
            diff = std::max(diff, std::abs(updated - result.value.at(s)));
            next.at(s) = updated;
        });
        std::swap(result.value, next);
        result.iterations = n;
        result.sup_diff_at_stop = diff;
        if (observer) observer(n, result.value);
        if (diff <= stop) {
            result.converged = true;
            break;
        }
    }

    detail::for_each_state(grid, [&](const AgeState& s) {
        result.policy.at(s) =
            detail::bellman_backup(s, result.value, model, alpha).action;
    });
    return result;
}

struct SolveResult {
    double gain = 0.0;
    ValueTable relative_cost;
    PolicyTable policy;
    std::int64_t iterations = 0;
    double span_at_stop = 0.0;
    bool converged = false;
};

/// Relative value iteration for the average-cost problem. Each Jacobi sweep
/// applies the undiscounted Bellman operator and renormalizes at the reset
/// state (0,1), so the iterate stays pinned to zero there; iteration stops
/// when the span seminorm of the step drops below tol. The reported gain is
/// the operator value at the reset state after the final sweep.
inline SolveResult relative_value_iteration(const ModelParams& model,
                                            const GridSpec& grid,
                                            double tol = 1e-9,
                                            std::int64_t max_iters = 200000) {
    if (!(tol > 0.0))
        throw std::invalid_argument("tolerance must be positive");
    if (max_iters < 1)
        throw std::invalid_argument("iteration budget must be positive");

    SolveResult result{0.0, ValueTable(grid), PolicyTable(grid)};
    ValueTable next(grid);
    const AgeState reset{0, 1};

    for (std::int64_t n = 1; n <= max_iters; ++n) {
        const double offset =
            detail::bellman_backup(reset, result.relative_cost, model, 1.0).value;
        double step_max = -std::numeric_limits<double>::infinity();
        double step_min = std::numeric_limits<double>::infinity();
        detail::for_each_state(grid, [&](const AgeState& s) {
            const double updated =
                detail::bellman_backup(s, result.relative_cost, model, 1.0).value -
                offset;
            const double step = updated - result.relative_cost.at(s);
            step_max = std::max(step_max, step);
            step_min = std::min(step_min, step);
            next.at(s) = updated;
        });
        std::swap(result.relative_cost, next);
        result.iterations = n;
        result.span_at_stop = step_max - step_min;
        if (result.span_at_stop <= tol) {
            result.converged = true;
            break;
        }
    }

    result.gain =
        detail::bellman_backup(reset, result.relative_cost, model, 1.0).value;
    detail::for_each_state(grid, [&](const AgeState& s) {
        result.policy.at(s) =
            detail::bellman_backup(s, result.relative_cost, model, 1.0).action;
    });
    return result;
}

/// Least client age at which the memory-fresh row of a policy samples, if
/// that row really is a clean idle-below, sample-above split. The top tenth
/// of the row is ignored so grid saturation cannot fake or break a
/// threshold. Returns nothing when the row is not threshold-shaped or never
/// samples below the ignored band.
inline std::optional<std::int64_t> extract_threshold(const PolicyTable& policy) {
    const std::int64_t y_cut = policy.grid().y_max() - policy.grid().y_max() / 10;
    std::optional<std::int64_t> first;
    for (std::int64_t y = 1; y <= y_cut; ++y) {
        const Action a = policy.at({0, y});
        if (!first && a == Action::Sample) first = y;
        if (first && a == Action::Idle) return std::nullopt;
    }
    return first;
}

/// Outcome of one structural check over a table. A healthy table reports
/// zero violations; worst_gap quantifies the largest breach found.
struct StructureReport {
    std::int64_t violations = 0;
    double worst_gap = 0.0;
    AgeState worst_state{0, 1};

    bool ok() const { return violations == 0; }

    void record(const AgeState& s, double gap) {
        ++violations;
        if (gap > worst_gap) {
            worst_gap = gap;
            worst_state = s;
        }
    }
};

namespace detail {

inline std::int64_t interior_x(const GridSpec& grid) {
    return grid.x_max() - grid.x_max() / 10;
}

inline std::int64_t interior_y(const GridSpec& grid) {
    return grid.y_max() - grid.y_max() / 10;
}

}  // namespace detail

/// Values must not decrease along either age coordinate. Checked on the
/// interior of the grid (top tenth of each axis excluded).
inline StructureReport verify_monotone(const ValueTable& v, double eps = 1e-9) {
    StructureReport report;
    const std::int64_t xc = detail::interior_x(v.grid());
    const std::int64_t yc = detail::interior_y(v.grid());
    for (std::int64_t x = 0; x <= xc; ++x) {
        for (std::int64_t y = v.grid().y_lo(x); y <= yc; ++y) {
            const double here = v.at({x, y});
            if (x + 1 <= std::min(y, xc) && v.at({x + 1, y}) < here - eps)
                report.record({x, y}, here - v.at({x + 1, y}));
            if (y + 1 <= yc && v.at({x, y + 1}) < here - eps)
                report.record({x, y}, here - v.at({x, y + 1}));
        }
    }
    return report;
}

/// Each memory-age row of the policy must switch from idle to sample at
/// most once as the client age grows.
inline StructureReport verify_threshold_in_y(const PolicyTable& policy) {
    StructureReport report;
    const std::int64_t xc = detail::interior_x(policy.grid());
    const std::int64_t yc = detail::interior_y(policy.grid());
    for (std::int64_t x = 0; x <= xc; ++x) {
        bool sampling = false;
        for (std::int64_t y = policy.grid().y_lo(x); y <= yc; ++y) {
            const Action a = policy.at({x, y});
            if (a == Action::Sample) sampling = true;
            else if (sampling) report.record({x, y}, 1.0);
        }
    }
    return report;
}

/// Increments in the client age must have non-increasing gains: the value
/// is concave along y within every memory-age row.
inline StructureReport verify_concavity_in_y(const ValueTable& v, double eps = 1e-9) {
    StructureReport report;
    const std::int64_t xc = detail::interior_x(v.grid());
    const std::int64_t yc = detail::interior_y(v.grid());
    for (std::int64_t x = 0; x <= xc; ++x) {
        for (std::int64_t y = v.grid().y_lo(x); y + 2 <= yc; ++y) {
            const double d1 = v.at({x, y + 1}) - v.at({x, y});
            const double d2 = v.at({x, y + 2}) - v.at({x, y + 1});
            if (d2 > d1 + eps) report.record({x, y}, d2 - d1);
        }
    }
    return report;
}

/// Idling must propagate down the diagonal: once the policy idles at some
/// state, it also idles at every state reached by aging both sides equally.
inline StructureReport verify_diagonal_idle(const PolicyTable& policy) {
    StructureReport report;
    const std::int64_t xc = detail::interior_x(policy.grid());
    const std::int64_t yc = detail::interior_y(policy.grid());
    for (std::int64_t gap = 0; gap <= yc; ++gap) {
        bool idled = false;
        for (std::int64_t x = std::max<std::int64_t>(1 - gap, 0);
             x <= xc && x + gap <= yc; ++x) {
            const Action a = policy.at({x, x + gap});
            if (a == Action::Idle) idled = true;
            else if (idled) report.record({x, x + gap}, 1.0);
        }
    }
    return report;
}

struct VanishingDiscountReport {
    struct Point {
        double alpha;
        double scaled_value;  // (1 - alpha) * V_alpha at the reset state
        double gap;           // distance to the average-cost gain
    };

    double gain = 0.0;
    std::vector<Point> points;
    bool gaps_decreasing = false;
    bool converged = false;
};

/// Compare discounted values against the average-cost gain along a schedule
/// of discount factors: (1-alpha)*V_alpha(0,1) must close in on the gain as
/// alpha approaches one.
inline VanishingDiscountReport vanishing_discount_check(
    const ModelParams& model, const GridSpec& grid,
    const std::vector<double>& alphas) {
    if (alphas.empty())
        throw std::invalid_argument("need at least one discount factor");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] > 0.0 && alphas[i] < 1.0))
            throw std::invalid_argument("discount factors must lie in (0,1)");
        if (i > 0 && !(alphas[i] > alphas[i - 1]))
            throw std::invalid_argument("discount factors must be increasing");
    }

    VanishingDiscountReport report;
    const SolveResult average = relative_value_iteration(model, grid);
    report.gain = average.gain;
    report.converged = average.converged;

    for (double alpha : alphas) {
        const DiscountedSolveResult run =
            discounted_value_iteration(model, grid, alpha, 1e-6);
        report.converged = report.converged && run.converged;
        const double scaled = (1.0 - alpha) * run.value.at({0, 1});
        report.points.push_back({alpha, scaled, std::abs(scaled - report.gain)});
    }

    report.gaps_decreasing = true;
    for (std::size_t i = 1; i < report.points.size(); ++i)
        if (!(report.points[i].gap < report.points[i - 1].gap))
            report.gaps_decreasing = false;
    return report;
}

}  // namespace memsamp
