#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "closed_form.hpp"
#include "figures.hpp"
#include "model.hpp"
#include "simulate.hpp"
#include "solver.hpp"

// End-to-end verification suite. Each check cross-validates two independent
// routes to the same quantity: closed forms against the grid solver, both
// against simulation, and the structural properties of the solver output
// against direct scans of the tables. The checks are deterministic for a
// fixed seed and are meant to run in well under two minutes.

namespace memsamp {

/// Outcome of one verification criterion.
struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;  // one-line summary of the measured margins
};

/// Full suite outcome.
struct VerificationReport {
    std::vector<CriterionResult> criteria;

    bool all_passed() const {
        for (const auto& c : criteria)
            if (!c.passed) return false;
        return true;
    }
};

/// Update-probability grid used by the cross-validation sweep.
inline std::vector<double> acceptance_p_grid() { return {0.1, 0.3, 0.5, 0.7, 0.9}; }

/// Sample-cost grid used by the cross-validation sweep.
inline std::vector<double> acceptance_c_grid() { return {0.0, 1.0, 5.0, 20.0, 80.0}; }

/// One solved sweep point, shared by the checks that need solver output.
struct SweepInstance {
    ModelParams model;
    ClosedFormReport report;
    GridSpec grid;
    SolveResult solution;
};

/// Solve every point of a parameter grid once.
inline std::vector<SweepInstance> solve_sweep(const std::vector<double>& p_grid,
                                              const std::vector<double>& c_grid) {
    if (p_grid.empty() || c_grid.empty())
        throw std::invalid_argument("parameter grids must be nonempty");
    std::vector<SweepInstance> instances;
    for (double p : p_grid)
        for (double c : c_grid) {
            ModelParams model{p, c};
            auto report = optimal_threshold(model);
            auto grid = GridSpec::sized_for(model);
            auto solution = relative_value_iteration(model, grid);
            instances.push_back({model, report, grid, std::move(solution)});
        }
    return instances;
}

/// Solve the default acceptance grid once.
inline std::vector<SweepInstance> solve_acceptance_sweep() {
    return solve_sweep(acceptance_p_grid(), acceptance_c_grid());
}

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream out;
    out.precision(3);
    out << std::scientific << v;
    return out.str();
}

}  // namespace detail

/// Criterion 1: the solver's gain matches the closed form within 1e-3 at
/// every sweep point, and the policy it finds is the closed-form threshold
/// (or the next integer when the two tie exactly).
inline CriterionResult check_closed_form_vs_solver(
    const std::vector<SweepInstance>& sweep) {
    double worst_err = 0.0;
    int matched = 0;
    std::string failure;
    for (const auto& inst : sweep) {
        double err = std::fabs(inst.solution.gain - inst.report.g_star);
        worst_err = std::max(worst_err, err);
        auto thr = extract_threshold(inst.solution.policy);
        bool tie = threshold_step_quadratic(inst.report.y0_star, inst.model) == 0.0;
        bool thr_ok = thr && (*thr == inst.report.y0_star ||
                              (tie && *thr == inst.report.y0_star + 1));
        if (inst.solution.converged && err <= 1e-3 && thr_ok) {
            ++matched;
        } else if (failure.empty()) {
            std::ostringstream out;
            out << "; first failure at p=" << inst.model.p << " c=" << inst.model.c;
            failure = out.str();
        }
    }
    std::ostringstream out;
    out << "worst |gain - closed form| = " << detail::fmt(worst_err) << "; "
        << matched << "/" << sweep.size() << " points matched" << failure;
    return {1, "closed form vs solver", matched == static_cast<int>(sweep.size()),
            out.str()};
}

/// Criterion 2: the closed-form cost reduces to the known small-threshold
/// identities, g(1) = 1/p + cp and g(2) = 1/p + (c+1)p/(1+p), to 1e-12.
inline CriterionResult check_cost_identities(
    const std::vector<double>& c_grid = acceptance_c_grid()) {
    double worst = 0.0;
    for (double p : default_p_grid())
        for (double c : c_grid) {
            ModelParams model{p, c};
            double e1 = std::fabs(threshold_average_cost(1, model) - (1.0 / p + c * p));
            double e2 = std::fabs(threshold_average_cost(2, model) -
                                  (1.0 / p + (c + 1.0) * p / (1.0 + p)));
            worst = std::max({worst, e1, e2});
        }
    return {2, "small-threshold cost identities", worst <= 1e-12,
            "worst identity error = " + detail::fmt(worst)};
}

/// Criterion 3: exact spot values. (p=0.5, c=5) gives threshold 2 with cost
/// exactly 4; (p=1, c=1) gives continuous minimizer exactly 1; (p=0.5, c=80)
/// gives threshold 12, confirmed by brute-force search over [1, 1e4].
inline CriterionResult check_spot_values() {
    std::ostringstream out;
    bool ok = true;

    auto r1 = optimal_threshold(ModelParams{0.5, 5.0});
    bool s1 = r1.y0_star == 2 && r1.g_star == 4.0;
    ok = ok && s1;
    out << "(0.5,5): threshold " << r1.y0_star << ", cost " << r1.g_star
        << (s1 ? " [ok]" : " [FAIL]");

    auto r2 = optimal_threshold(ModelParams{1.0, 1.0});
    bool s2 = r2.y_prime == 1.0;
    ok = ok && s2;
    out << "; (1,1): minimizer " << r2.y_prime << (s2 ? " [ok]" : " [FAIL]");

    ModelParams m3{0.5, 80.0};
    auto r3 = optimal_threshold(m3);
    std::int64_t best = 1;
    double best_cost = threshold_average_cost(1, m3);
    for (std::int64_t t = 2; t <= 10000; ++t) {
        double cost = threshold_average_cost(t, m3);
        if (cost < best_cost) {
            best_cost = cost;
            best = t;
        }
    }
    bool s3 = best == 12 && r3.y0_star == 12;
    ok = ok && s3;
    out << "; (0.5,80): threshold " << r3.y0_star << ", brute force " << best
        << (s3 ? " [ok]" : " [FAIL]");

    return {3, "exact spot values", ok, out.str()};
}

/// Criterion 4: the closed-form lower bound never exceeds the optimal cost,
/// and equals the cost formula evaluated at the continuous minimizer to 1e-9.
inline CriterionResult check_lower_bound(
    const std::vector<double>& p_grid = acceptance_p_grid(),
    const std::vector<double>& c_grid = acceptance_c_grid()) {
    double worst_gap = 0.0;       // how far the bound sits below the cost
    double worst_identity = 0.0;  // bound vs formula at the continuous minimizer
    bool ordered = true;
    for (double p : p_grid)
        for (double c : c_grid) {
            ModelParams model{p, c};
            auto rep = optimal_threshold(model);
            if (rep.lower_bound > rep.g_star + 1e-12) ordered = false;
            worst_gap = std::max(worst_gap, rep.g_star - rep.lower_bound);
            double identity = std::fabs(
                rep.lower_bound - continuous_threshold_cost(rep.y0_tilde, model));
            worst_identity = std::max(worst_identity, identity);
        }
    bool ok = ordered && worst_identity <= 1e-9;
    std::ostringstream out;
    out << (ordered ? "bound <= optimal cost at all points" : "bound ORDER VIOLATED")
        << "; worst minimizer identity error = " << detail::fmt(worst_identity);
    return {4, "optimal cost lower bound", ok, out.str()};
}

/// Criterion 5: long-run simulation of the optimal threshold policy matches
/// the closed-form cost within three CI half-widths at three spot models.
inline CriterionResult check_simulation_agreement(std::uint64_t seed) {
    const std::vector<ModelParams> points = {
        {0.5, 5.0}, {0.5, 80.0}, {0.8, 20.0}};
    bool ok = true;
    std::ostringstream out;
    out << "|sim - closed form| vs 3*CI:";
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto rep = optimal_threshold(points[i]);
        SimConfig config;
        config.slots = 1000000;
        config.warmup = 10000;
        config.seed = seed ^ static_cast<std::uint64_t>(i);
        auto est = simulate(points[i], ThresholdPolicy{rep.y0_star}, config);
        double err = std::fabs(est.mean_cost - rep.g_star);
        bool within = err <= 3.0 * est.ci_halfwidth && est.ci_halfwidth > 0.0;
        ok = ok && within;
        out << " (" << points[i].p << "," << points[i].c << "): "
            << detail::fmt(err) << " vs " << detail::fmt(3.0 * est.ci_halfwidth)
            << (within ? " [ok]" : " [FAIL]");
    }
    return {5, "simulation agreement", ok, out.str()};
}

/// Criterion 6: Monte Carlo first-passage cost from (1,1) matches the closed
/// form within three CI half-widths at three spot models; the closed form
/// never exceeds its affine bound anywhere on the sweep grid up to age 100;
/// the deterministic-writer case evaluates to exactly 3.
inline CriterionResult check_first_passage(
    std::uint64_t seed, const std::vector<double>& p_grid = acceptance_p_grid(),
    const std::vector<double>& c_grid = acceptance_c_grid()) {
    const std::vector<ModelParams> points = {{0.5, 0.0}, {0.5, 2.0}, {0.8, 5.0}};
    bool ok = true;
    std::ostringstream out;
    out << "|mc - exact| vs 3*CI:";
    for (std::size_t i = 0; i < points.size(); ++i) {
        double exact = first_passage_cost(AgeState{1, 1}, points[i]);
        auto est = first_passage_monte_carlo(points[i], AgeState{1, 1}, 200000,
                                             seed ^ static_cast<std::uint64_t>(i));
        double err = std::fabs(est.mean - exact);
        bool within = err <= 3.0 * est.ci_halfwidth && est.aborted == 0;
        ok = ok && within;
        out << " (" << points[i].p << "," << points[i].c << "): "
            << detail::fmt(err) << " vs " << detail::fmt(3.0 * est.ci_halfwidth)
            << (within ? " [ok]" : " [FAIL]");
    }

    std::int64_t bound_violations = 0;
    for (double p : p_grid)
        for (double c : c_grid) {
            ModelParams model{p, c};
            for (std::int64_t y = 1; y <= 100; ++y)
                for (std::int64_t x = 0; x <= y; ++x) {
                    AgeState s{x, y};
                    if (first_passage_cost(s, model) >
                        first_passage_cost_bound(s, model) + 1e-9)
                        ++bound_violations;
                }
        }
    ok = ok && bound_violations == 0;
    out << "; bound violations: " << bound_violations;

    double deterministic = first_passage_cost(AgeState{1, 1}, ModelParams{1.0, 0.0});
    bool det_ok = deterministic == 3.0;
    ok = ok && det_ok;
    out << "; deterministic case = " << deterministic << (det_ok ? " [ok]" : " [FAIL]");

    return {6, "first passage costs", ok, out.str()};
}

/// Criterion 7: the four structural verifiers (monotone values, per-row
/// threshold policies, concave values in the client age, idling preserved
/// along diagonals) report zero violations on every converged sweep solve.
inline CriterionResult check_structure(const std::vector<SweepInstance>& sweep) {
    std::int64_t violations = 0;
    int converged = 0;
    std::string where;
    for (const auto& inst : sweep) {
        if (!inst.solution.converged) continue;
        ++converged;
        std::int64_t here =
            verify_monotone(inst.solution.relative_cost).violations +
            verify_threshold_in_y(inst.solution.policy).violations +
            verify_concavity_in_y(inst.solution.relative_cost).violations +
            verify_diagonal_idle(inst.solution.policy).violations;
        violations += here;
        if (here > 0 && where.empty()) {
            std::ostringstream out;
            out << "; first at p=" << inst.model.p << " c=" << inst.model.c;
            where = out.str();
        }
    }
    bool ok = violations == 0 && converged == static_cast<int>(sweep.size());
    std::ostringstream out;
    out << "violations across " << converged << " converged instances: "
        << violations << where;
    return {7, "structural properties", ok, out.str()};
}

/// Criterion 8: the scaled discounted value approaches the average-cost gain
/// as the discount factor increases, with a final gap of at most 0.05.
inline CriterionResult check_vanishing_discount() {
    ModelParams model{0.5, 5.0};
    auto grid = GridSpec::sized_for(model);
    auto report = vanishing_discount_check(model, grid, {0.9, 0.99, 0.999});
    double final_gap = report.points.back().gap;
    bool ok = report.converged && report.gaps_decreasing && final_gap <= 0.05;
    std::ostringstream out;
    out << "gaps";
    for (const auto& pt : report.points) out << " " << detail::fmt(pt.gap);
    out << (report.gaps_decreasing ? " (decreasing)" : " (NOT decreasing)");
    return {8, "vanishing discount", ok, out.str()};
}

/// Criterion 9: the figure tables carry their claimed shapes. Threshold
/// curves are non-decreasing in p at fixed c; optimal cost curves are
/// non-increasing in p and sit above the lower bound; the cost-vs-threshold
/// curve at (0.5, 80) bottoms out at threshold 12.
inline CriterionResult check_figure_properties() {
    bool ok = true;
    std::ostringstream out;

    auto fig3 = threshold_vs_p({1.0, 5.0, 20.0, 80.0}, default_p_grid());
    int fig3_bad = 0;
    for (std::size_t i = 1; i < fig3.size(); ++i)
        if (fig3[i].c == fig3[i - 1].c && fig3[i].y0_star < fig3[i - 1].y0_star)
            ++fig3_bad;
    ok = ok && fig3_bad == 0;
    out << "threshold monotonicity violations: " << fig3_bad;

    auto fig4 = cost_vs_p({1.0, 5.0, 20.0, 80.0}, default_p_grid());
    int fig4_bad = 0;
    for (std::size_t i = 0; i < fig4.size(); ++i) {
        if (fig4[i].g_star < fig4[i].lower_bound - 1e-12) ++fig4_bad;
        if (i > 0 && fig4[i].c == fig4[i - 1].c &&
            fig4[i].g_star > fig4[i - 1].g_star + 1e-12)
            ++fig4_bad;
    }
    ok = ok && fig4_bad == 0;
    out << "; cost shape violations: " << fig4_bad;

    auto fig2 = threshold_cost_curve(ModelParams{0.5, 80.0}, 40);
    std::int64_t arg = 0;
    double best = 0.0;
    bool first = true;
    for (const auto& row : fig2) {
        if (!row.marker.empty()) continue;
        if (first || row.cost < best) {
            best = row.cost;
            arg = static_cast<std::int64_t>(row.threshold);
            first = false;
        }
    }
    bool fig2_ok = arg == 12;
    ok = ok && fig2_ok;
    out << "; cost curve minimum at threshold " << arg
        << (fig2_ok ? " [ok]" : " [FAIL]");

    return {9, "figure properties", ok, out.str()};
}

/// Run the full verification suite over a parameter grid (defaults to the
/// acceptance grid). The seed feeds the two Monte Carlo checks; everything
/// else is deterministic arithmetic. Throws on empty grids.
inline VerificationReport run_acceptance_suite(
    std::uint64_t seed = 1729,
    const std::vector<double>& p_grid = acceptance_p_grid(),
    const std::vector<double>& c_grid = acceptance_c_grid()) {
    VerificationReport report;
    auto sweep = solve_sweep(p_grid, c_grid);
    report.criteria.push_back(check_closed_form_vs_solver(sweep));
    report.criteria.push_back(check_cost_identities(c_grid));
    report.criteria.push_back(check_spot_values());
    report.criteria.push_back(check_lower_bound(p_grid, c_grid));
    report.criteria.push_back(check_simulation_agreement(seed));
    report.criteria.push_back(check_first_passage(seed, p_grid, c_grid));
    report.criteria.push_back(check_structure(sweep));
    report.criteria.push_back(check_vanishing_discount());
    report.criteria.push_back(check_figure_properties());
    return report;
}

}  // namespace memsamp
