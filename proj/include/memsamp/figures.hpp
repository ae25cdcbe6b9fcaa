#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "closed_form.hpp"
#include "model.hpp"

// Reproduction data for the summary figures: cost versus threshold at one
// parameter point, and optimal threshold / optimal cost versus the write
// probability across sampling fees. Pure closed-form sweeps; the CLI only
// serializes what these return.

namespace memsamp {

/// Default write-probability grid for the parameter sweeps: 0.05 to 0.95 in
/// steps of 0.05.
inline std::vector<double> default_p_grid() {
    std::vector<double> grid;
    for (int k = 1; k <= 19; ++k) grid.push_back(static_cast<double>(k) / 20.0);
    return grid;
}

/// Stationary cost as a function of the threshold, ending with two marker
/// rows: the optimal integer threshold and the continuous minimizer.
struct ThresholdCurveRow {
    double threshold;
    double cost;
    std::string marker;  // empty for curve rows
};

inline std::vector<ThresholdCurveRow> threshold_cost_curve(
    const ModelParams& model, std::int64_t threshold_hi = 40) {
    if (threshold_hi < 1)
        throw std::invalid_argument("curve needs at least one threshold");
    std::vector<ThresholdCurveRow> rows;
    for (std::int64_t t = 1; t <= threshold_hi; ++t)
        rows.push_back({static_cast<double>(t),
                        threshold_average_cost(t, model), ""});
    const ClosedFormReport report = optimal_threshold(model);
    rows.push_back({static_cast<double>(report.y0_star), report.g_star,
                    "optimal_integer"});
    if (report.y0_tilde > 0.0)
        rows.push_back({report.y0_tilde,
                        continuous_threshold_cost(report.y0_tilde, model),
                        "continuous_minimizer"});
    return rows;
}

/// Optimal threshold across write probabilities, one block per sampling fee.
struct ThresholdVsPRow {
    double c;
    double p;
    std::int64_t y0_star;
};

inline std::vector<ThresholdVsPRow> threshold_vs_p(
    const std::vector<double>& c_values, const std::vector<double>& p_grid) {
    std::vector<ThresholdVsPRow> rows;
    for (double c : c_values)
        for (double p : p_grid)
            rows.push_back({c, p, optimal_threshold(ModelParams(p, c)).y0_star});
    return rows;
}

/// Optimal cost and its lower bound across write probabilities, one block
/// per sampling fee.
struct CostVsPRow {
    double c;
    double p;
    double g_star;
    double lower_bound;
};

inline std::vector<CostVsPRow> cost_vs_p(const std::vector<double>& c_values,
                                         const std::vector<double>& p_grid) {
    std::vector<CostVsPRow> rows;
    for (double c : c_values)
        for (double p : p_grid) {
            const ClosedFormReport report = optimal_threshold(ModelParams(p, c));
            rows.push_back({c, p, report.g_star, report.lower_bound});
        }
    return rows;
}

}  // namespace memsamp
