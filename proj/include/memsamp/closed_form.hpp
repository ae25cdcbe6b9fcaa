#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "model.hpp"

// Closed-form results for threshold policies: the reader idles until the
// client age reaches a threshold on the memory-fresh axis and samples there.
// Everything in this header is exact arithmetic on the stationary cycle
// structure of that policy; no iteration and no randomness.

namespace memsamp {

/// Stationary average cost per slot of the threshold policy, as a function
/// of a real-valued threshold. Used for the integer policy cost and for the
/// continuous relaxation that yields the lower bound.
/// \param threshold strictly positive
inline double continuous_threshold_cost(double threshold, const ModelParams& model) {
    if (!(threshold > 0.0))
        throw std::invalid_argument("threshold must be positive");
    const double pb = model.pbar();
    return 0.5 * (1.0 / model.p + threshold +
                  (2.0 * model.c * model.p + pb / model.p) /
                      (model.p * threshold + pb));
}

/// Stationary average cost per slot of the integer threshold policy.
/// \param threshold sampling threshold, >= 1
inline double threshold_average_cost(std::int64_t threshold, const ModelParams& model) {
    if (threshold < 1)
        throw std::invalid_argument("threshold must be a positive integer");
    return continuous_threshold_cost(static_cast<double>(threshold), model);
}

/// Quadratic in the threshold whose sign decides whether raising the
/// threshold by one lowers the stationary cost: negative means the cost is
/// still falling, zero means the two adjacent thresholds tie, positive means
/// the cost is rising.
inline double threshold_step_quadratic(std::int64_t threshold, const ModelParams& model) {
    const double y = static_cast<double>(threshold);
    return y * y + (2.0 / model.p - 1.0) * y - 2.0 * model.c;
}

/// Everything the closed-form optimality analysis produces in one pass.
struct ClosedFormReport {
    std::int64_t y0_star;  // optimal integer threshold, >= 1
    double y_prime;        // positive root of the threshold quadratic
    double g_star;         // stationary cost of the y0_star policy
    double lower_bound;    // cost lower bound over all policies
    double y0_tilde;       // minimizer of the continuous threshold cost
};

/// Closed-form optimal threshold and the accompanying cost quantities.
///
/// The integer optimum is the ceiling of the positive quadratic root; exact
/// integer roots are a tie between the two adjacent thresholds and resolve
/// to the root itself. A small snap tolerance keeps floating-point noise on
/// tied instances from bumping the ceiling up by one.
inline ClosedFormReport optimal_threshold(const ModelParams& model) {
    const double pb = model.pbar();
    const double a = 1.0 / model.p - 0.5;
    // conjugate form of sqrt(2c + a^2) - a, immune to cancellation
    const double y_prime = 2.0 * model.c / (std::sqrt(2.0 * model.c + a * a) + a);

    ClosedFormReport report;
    report.y_prime = y_prime;
    report.y0_star = std::max<std::int64_t>(
        static_cast<std::int64_t>(std::ceil(y_prime - 1e-9)), 1);
    report.g_star = threshold_average_cost(report.y0_star, model);
    report.lower_bound = 0.5 + std::sqrt(2.0 * model.c + pb / (model.p * model.p));

    const double b = pb / model.p;
    const double num = 2.0 * model.c + b;
    const double den = std::sqrt(2.0 * model.c + pb / (model.p * model.p)) + b;
    report.y0_tilde = num > 0.0 ? num / den : 0.0;
    return report;
}

/// Lower bound on the average cost of any sampling policy.
inline double optimal_cost_lower_bound(const ModelParams& model) {
    return optimal_threshold(model).lower_bound;
}

/// Relative cost function of a threshold policy on its recurrent class,
/// normalized to zero at the reset state (0,1), together with the policy's
/// gain. Values on the memory-fresh axis up to the construction extent are
/// tabulated; everything else follows the closed-form continuations and is
/// computed on demand, never extrapolated.
class RelativeCostProfile {
public:
    RelativeCostProfile(const ModelParams& model, std::int64_t threshold,
                        std::int64_t y_extent)
        : model_(model), threshold_(threshold), y_extent_(y_extent) {
        if (threshold_ < 1)
            throw std::invalid_argument("threshold must be a positive integer");
        if (y_extent_ < threshold_)
            throw std::invalid_argument("profile extent must reach the threshold");
        gain_ = threshold_average_cost(threshold_, model_);

        axis_.assign(static_cast<std::size_t>(y_extent_) + 1, 0.0);
        for (std::int64_t y = threshold_; y <= y_extent_; ++y)
            axis_[static_cast<std::size_t>(y)] = axis_tail(y);
        band_constant_ =
            static_cast<double>(threshold_) - gain_ + model_.p * axis_[static_cast<std::size_t>(threshold_)];

        if (threshold_ > 1) {
            const double edge =
                (band_constant_ + model_.pbar() / model_.p) / model_.p - 1.0;
            for (std::int64_t k = 1; k < threshold_; ++k) {
                const double kk = static_cast<double>(k);
                axis_[static_cast<std::size_t>(threshold_ - k)] =
                    (kk - 1.0) * (static_cast<double>(threshold_) - gain_) -
                    kk * (kk + 1.0) / 2.0 + 1.0 + edge;
            }
            // the band recursion must close the loop at the reset state;
            // anything beyond rounding noise means an inconsistent gain
            if (std::abs(axis_[1]) > 1e-6)
                throw std::logic_error("relative cost band failed to normalize");
            axis_[1] = 0.0;
        }
    }

    const ModelParams& params() const { return model_; }
    std::int64_t threshold() const { return threshold_; }
    std::int64_t y_extent() const { return y_extent_; }
    double gain() const { return gain_; }

    /// Constant of the pre-threshold band recursion: expected relative cost
    /// of the slot in which the client age first reaches the threshold.
    double band_constant() const { return band_constant_; }

    /// Relative cost at a state of the policy's recurrent class.
    double value_at(const AgeState& s) const {
        require_valid(s);
        if (!is_feasible_under_threshold(s, threshold_))
            throw std::domain_error(
                "state is outside the threshold policy's recurrent class");
        if (s.x == 0 || s.y < threshold_) return axis_value(s.y);
        return off_axis_value(s.y);
    }

    /// Relative cost extended to every valid state. Outside the recurrent
    /// class the continuation follows the gap rule (sample when y - x has
    /// reached the threshold), which lands back in the class in one step.
    double value_extended(const AgeState& s) const {
        require_valid(s);
        if (is_feasible_under_threshold(s, threshold_)) return value_at(s);
        const double diag = s.x + 1 < threshold_ ? axis_value(s.x + 1)
                                                 : off_axis_value(s.x + 1);
        return static_cast<double>(s.y) + model_.c - gain_ +
               model_.p * axis_value(s.x + 1) + model_.pbar() * diag;
    }

    /// Copy with one tabulated axis value nudged. Sensitivity handle for the
    /// residual checks: a genuine profile must not survive perturbation.
    RelativeCostProfile perturbed(std::int64_t y, double delta) const {
        RelativeCostProfile copy(*this);
        copy.axis_.at(static_cast<std::size_t>(y)) += delta;
        return copy;
    }

private:
    double axis_value(std::int64_t y) const {
        if (y <= y_extent_) return axis_[static_cast<std::size_t>(y)];
        return axis_tail(y);
    }

    // f on the memory-fresh axis at and beyond the threshold: linear in y.
    // With a pre-threshold band the diagonal re-entry state has zero
    // relative cost and the slope is one; the threshold-one policy re-enters
    // at the diagonal instead and the intercept absorbs that continuation.
    double axis_tail(std::int64_t y) const {
        if (threshold_ == 1) return static_cast<double>(y) - 1.0;
        return static_cast<double>(y) - gain_ + model_.c;
    }

    // f at off-axis states of the recurrent class with y at or beyond the
    // threshold boundary: the policy idles until the next write, so the
    // value is the summed geometric continuation and does not depend on x.
    double off_axis_value(std::int64_t y) const {
        const double p = model_.p;
        const double pb = model_.pbar();
        const double intercept = threshold_ == 1 ? -1.0 : model_.c - gain_;
        return (1.0 + p) * (static_cast<double>(y) / p + pb / (p * p)) + 1.0 +
               intercept - gain_ / p;
    }

    ModelParams model_;
    std::int64_t threshold_;
    std::int64_t y_extent_;
    double gain_ = 0.0;
    double band_constant_ = 0.0;
    std::vector<double> axis_;  // f(0, y) for y = 1..y_extent, index 0 unused
};

/// Build the relative cost profile of a threshold policy. A zero extent
/// picks a default comfortably past the threshold.
inline RelativeCostProfile relative_cost_profile(const ModelParams& model,
                                                 std::int64_t threshold,
                                                 std::int64_t y_extent = 0) {
    if (y_extent == 0) y_extent = threshold + 32;
    return RelativeCostProfile(model, threshold, y_extent);
}

/// Residual of the average-cost optimality equation at one recurrent-class
/// state: gain + f(s) minus the better of the two action continuations. Zero
/// everywhere certifies the profile's policy as average-cost optimal.
inline double bellman_residual(const RelativeCostProfile& profile, const AgeState& s) {
    const ModelParams& model = profile.params();
    double best = 0.0;
    bool first = true;
    for (Action a : {Action::Idle, Action::Sample}) {
        double rhs = stage_cost(s, a, model);
        for (const auto& br : transition(s, a, model))
            rhs += br.prob * profile.value_extended(br.next);
        if (first || rhs < best) best = rhs;
        first = false;
    }
    return profile.gain() + profile.value_at(s) - best;
}

/// Expected cost accumulated by the always-sample chain from a start state
/// until it first reaches the reset state (0,1), in closed form. Exact for
/// diagonal starts x = y; for x < y it overshoots the true passage cost by
/// (1-p)/p * (y - x) because the closed form lets the client age keep
/// growing during the pre-write run instead of resetting it to x+1.
inline double first_passage_cost(const AgeState& s, const ModelParams& model) {
    require_valid(s);
    const double p = model.p;
    const double diag_11 =
        ((1.0 / p + 1.0) * (model.c + 1.0) + 1.0 / (p * p)) / p;
    return (model.c + static_cast<double>(s.y)) / p +
           (model.c + static_cast<double>(s.x)) + 1.0 / (p * p) +
           model.pbar() * diag_11;
}

/// Affine-in-y upper bound on the always-sample first passage cost. Finite
/// for every state, which is what the average-cost optimality argument
/// needs; much looser than first_passage_cost.
inline double first_passage_cost_bound(const AgeState& s, const ModelParams& model) {
    require_valid(s);
    const double p = model.p;
    return (1.0 + p) / (p * p) * (model.c + static_cast<double>(s.y)) +
           1.5 / (p * p * p);
}

}  // namespace memsamp
