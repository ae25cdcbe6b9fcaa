// Command-line surface for the memory-sampling toolkit: closed forms, the
// average-cost solver, the slot simulator, figure data, and the one-shot
// verification suite. Every table is CSV with a single header row and '.'
// decimals; every output file gets a sidecar '<file>.manifest' with key=value
// lines echoing the command, parameters, seed, version, and timestamp.
//
// Exit codes: 0 success, 1 verification/property failure, 2 usage or
// parameter error, 3 numerical non-convergence.

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "memsamp/closed_form.hpp"
#include "memsamp/figures.hpp"
#include "memsamp/model.hpp"
#include "memsamp/simulate.hpp"
#include "memsamp/solver.hpp"
#include "memsamp/verification.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
    kOk = 0,
    kCheckFailed = 1,
    kUsageError = 2,
    kNotConverged = 3,
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string fmt_list(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ",";
        out += fmt(values[i]);
    }
    return out;
}

std::string iso_timestamp_utc() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

using KeyValues = std::vector<std::pair<std::string, std::string>>;

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << body;
    out.flush();
    if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

// Sidecar manifest next to an output file.
void write_manifest(const std::string& output_path, const std::string& command,
                    const KeyValues& params) {
    std::string body = "command=" + command + "\n";
    for (const auto& [key, value] : params) body += key + "=" + value + "\n";
    body += "version=" + std::string(kVersion) + "\n";
    body += "timestamp=" + iso_timestamp_utc() + "\n";
    write_file(output_path + ".manifest", body);
}

// ---------------------------------------------------------------- closed-form

struct ClosedFormArgs {
    double p = 0.0;
    double c = 0.0;
    std::string out;
};

int run_closed_form(const ClosedFormArgs& args) {
    memsamp::ModelParams model{args.p, args.c};
    const memsamp::ClosedFormReport report = memsamp::optimal_threshold(model);

    std::printf("Y_prime=%s\n", fmt(report.y_prime).c_str());
    std::printf("Y0_star=%lld\n", static_cast<long long>(report.y0_star));
    std::printf("g_star=%s\n", fmt(report.g_star).c_str());
    std::printf("lower_bound=%s\n", fmt(report.lower_bound).c_str());
    std::printf("Y0_tilde=%s\n", fmt(report.y0_tilde).c_str());

    if (!args.out.empty()) {
        std::string csv = "p,c,Y_prime,Y0_star,g_star,lower_bound,Y0_tilde\n";
        csv += fmt(args.p) + "," + fmt(args.c) + "," + fmt(report.y_prime) + "," +
               std::to_string(report.y0_star) + "," + fmt(report.g_star) + "," +
               fmt(report.lower_bound) + "," + fmt(report.y0_tilde) + "\n";
        write_file(args.out, csv);
        write_manifest(args.out, "closed-form",
                       {{"p", fmt(args.p)}, {"c", fmt(args.c)}, {"out", args.out}});
    }
    return kOk;
}

// ---------------------------------------------------------------------- solve

struct SolveArgs {
    double p = 0.0;
    double c = 0.0;
    double tol = 1e-9;
    std::int64_t ymax = 0;  // 0 selects the automatic grid
    std::int64_t max_iters = 200000;
    std::string out;
};

int run_solve(const SolveArgs& args) {
    memsamp::ModelParams model{args.p, args.c};
    const memsamp::GridSpec grid = args.ymax == 0
                                       ? memsamp::GridSpec::sized_for(model)
                                       : memsamp::GridSpec(args.ymax, args.ymax);
    const memsamp::SolveResult solution =
        memsamp::relative_value_iteration(model, grid, args.tol, args.max_iters);
    const std::optional<std::int64_t> threshold =
        memsamp::extract_threshold(solution.policy);

    std::printf("g=%s\n", fmt(solution.gain).c_str());
    std::printf("threshold=%s\n",
                threshold ? std::to_string(*threshold).c_str() : "none");
    std::printf("iterations=%lld\n", static_cast<long long>(solution.iterations));
    std::printf("converged=%s\n", solution.converged ? "true" : "false");

    if (!args.out.empty()) {
        std::string csv = "x,y,action,f\n";
        memsamp::detail::for_each_state(grid, [&](const memsamp::AgeState& s) {
            csv += std::to_string(s.x) + "," + std::to_string(s.y) + "," +
                   (solution.policy.at(s) == memsamp::Action::Sample ? "sample"
                                                                     : "idle") +
                   "," + fmt(solution.relative_cost.at(s)) + "\n";
        });
        write_file(args.out, csv);
        write_manifest(args.out, "solve",
                       {{"p", fmt(args.p)},
                        {"c", fmt(args.c)},
                        {"tol", fmt(args.tol)},
                        {"ymax", std::to_string(grid.y_max())},
                        {"gain", fmt(solution.gain)},
                        {"threshold", threshold ? std::to_string(*threshold) : "none"},
                        {"iterations", std::to_string(solution.iterations)},
                        {"converged", solution.converged ? "true" : "false"}});
    }
    return solution.converged ? kOk : kNotConverged;
}

// ------------------------------------------------------------------- simulate

struct SimulateArgs {
    double p = 0.0;
    double c = 0.0;
    std::string policy;
    std::int64_t slots = 1000000;
    std::int64_t warmup = 10000;
    std::uint64_t seed = 1;
    std::int64_t batches = 30;
    std::string out;
};

int run_simulate(const SimulateArgs& args) {
    memsamp::ModelParams model{args.p, args.c};
    const memsamp::PolicySpec policy = memsamp::parse_policy(args.policy);
    memsamp::SimConfig config;
    config.slots = args.slots;
    config.warmup = args.warmup;
    config.seed = args.seed;
    config.batches = args.batches;
    const memsamp::SimEstimate estimate = memsamp::simulate(model, policy, config);

    std::string csv =
        "p,c,policy,slots,seed,mean_cost,ci_halfwidth,mean_age,sample_rate\n";
    csv += fmt(args.p) + "," + fmt(args.c) + "," + memsamp::policy_label(policy) +
           "," + std::to_string(args.slots) + "," + std::to_string(args.seed) +
           "," + fmt(estimate.mean_cost) + "," + fmt(estimate.ci_halfwidth) + "," +
           fmt(estimate.mean_age) + "," + fmt(estimate.sample_rate) + "\n";
    std::fputs(csv.c_str(), stdout);
    if (estimate.age_divergent)
        std::fprintf(stderr,
                     "note: the policy never samples, so the client age grows "
                     "without bound and mean_age reflects the horizon\n");

    if (!args.out.empty()) {
        write_file(args.out, csv);
        write_manifest(args.out, "simulate",
                       {{"p", fmt(args.p)},
                        {"c", fmt(args.c)},
                        {"policy", memsamp::policy_label(policy)},
                        {"slots", std::to_string(args.slots)},
                        {"warmup", std::to_string(args.warmup)},
                        {"seed", std::to_string(args.seed)},
                        {"batches", std::to_string(args.batches)}});
    }
    return kOk;
}

// -------------------------------------------------------------------- figures

struct FiguresArgs {
    std::string fig;
    std::string outdir = ".";
    double p = 0.5;   // fig2 only; the source figure does not pin p
    double c = 80.0;  // fig2 only
    std::vector<double> c_grid{1.0, 5.0, 20.0, 80.0};
};

int run_figures(const FiguresArgs& args) {
    std::filesystem::create_directories(args.outdir);
    bool properties_ok = true;
    auto flag = [&](const std::string& what) {
        std::fprintf(stderr, "property violation: %s\n", what.c_str());
        properties_ok = false;
    };

    if (args.fig == "fig2") {
        memsamp::ModelParams model{args.p, args.c};
        const auto rows = memsamp::threshold_cost_curve(model, 40);

        // The integer marker must attain the curve minimum, and the
        // continuous minimizer can only improve on it.
        double curve_min = rows[0].cost;
        for (const auto& row : rows)
            if (row.marker.empty()) curve_min = std::min(curve_min, row.cost);
        for (const auto& row : rows) {
            if (row.marker == "optimal_integer" && row.cost > curve_min + 1e-12)
                flag("optimal_integer marker misses the curve minimum");
            if (row.marker == "continuous_minimizer" && row.cost > curve_min + 1e-12)
                flag("continuous_minimizer exceeds the curve minimum");
        }

        std::string csv = "Y0,g0,marker\n";
        for (const auto& row : rows)
            csv += fmt(row.threshold) + "," + fmt(row.cost) + "," + row.marker + "\n";
        const std::string path = args.outdir + "/fig2.csv";
        write_file(path, csv);
        write_manifest(path, "figures",
                       {{"fig", "fig2"}, {"p", fmt(args.p)}, {"c", fmt(args.c)}});
    } else if (args.fig == "fig3") {
        const auto rows =
            memsamp::threshold_vs_p(args.c_grid, memsamp::default_p_grid());
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (rows[i].c == rows[i - 1].c && rows[i].y0_star < rows[i - 1].y0_star)
                flag("optimal threshold decreases in p at c=" + fmt(rows[i].c));

        std::string csv = "c,p,Y0_star\n";
        for (const auto& row : rows)
            csv += fmt(row.c) + "," + fmt(row.p) + "," +
                   std::to_string(row.y0_star) + "\n";
        const std::string path = args.outdir + "/fig3.csv";
        write_file(path, csv);
        write_manifest(path, "figures", {{"fig", "fig3"}, {"c_grid", fmt_list(args.c_grid)}});
    } else {
        const auto rows = memsamp::cost_vs_p(args.c_grid, memsamp::default_p_grid());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].g_star < rows[i].lower_bound - 1e-12)
                flag("optimal cost falls below its lower bound at c=" +
                     fmt(rows[i].c) + " p=" + fmt(rows[i].p));
            if (i > 0 && rows[i].c == rows[i - 1].c &&
                rows[i].g_star > rows[i - 1].g_star + 1e-12)
                flag("optimal cost increases in p at c=" + fmt(rows[i].c));
        }

        std::string csv = "c,p,g_star,lower_bound\n";
        for (const auto& row : rows)
            csv += fmt(row.c) + "," + fmt(row.p) + "," + fmt(row.g_star) + "," +
                   fmt(row.lower_bound) + "\n";
        const std::string path = args.outdir + "/fig4.csv";
        write_file(path, csv);
        write_manifest(path, "figures", {{"fig", "fig4"}, {"c_grid", fmt_list(args.c_grid)}});
    }
    return properties_ok ? kOk : kCheckFailed;
}

// --------------------------------------------------------------------- verify

struct VerifyArgs {
    std::vector<double> p_grid = memsamp::acceptance_p_grid();
    std::vector<double> c_grid = memsamp::acceptance_c_grid();
    std::uint64_t seed = 1729;
};

int run_verify(const VerifyArgs& args) {
    const memsamp::VerificationReport report =
        memsamp::run_acceptance_suite(args.seed, args.p_grid, args.c_grid);
    int passed = 0;
    for (const auto& criterion : report.criteria) {
        passed += criterion.passed ? 1 : 0;
        std::printf("[%s] criterion %d: %s  (%s)\n",
                    criterion.passed ? "PASS" : "FAIL", criterion.id,
                    criterion.name.c_str(), criterion.detail.c_str());
    }
    std::printf("result=%s passed=%d total=%zu seed=%llu\n",
                report.all_passed() ? "pass" : "fail", passed,
                report.criteria.size(),
                static_cast<unsigned long long>(args.seed));
    return report.all_passed() ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Memory-sampling toolkit: closed-form thresholds, average-cost "
                 "solver, slot simulator, figure data, verification suite"};
    app.set_version_flag("--version", std::string("memsamp ") + kVersion);
    app.require_subcommand(1);

    ClosedFormArgs closed_args;
    auto* closed = app.add_subcommand(
        "closed-form", "Print the closed-form threshold report for one (p, c)");
    closed->add_option("--p", closed_args.p, "write probability, in (0,1]")
        ->required();
    closed->add_option("--c", closed_args.c, "sampling cost, >= 0")->required();
    closed->add_option("--out", closed_args.out,
                       "also write a single-row CSV to this path");

    SolveArgs solve_args;
    auto* solve = app.add_subcommand(
        "solve", "Solve the truncated average-cost problem by relative value "
                 "iteration");
    solve->add_option("--p", solve_args.p, "write probability, in (0,1]")
        ->required();
    solve->add_option("--c", solve_args.c, "sampling cost, >= 0")->required();
    solve->add_option("--tol", solve_args.tol,
                      "span-seminorm stopping tolerance (default 1e-9)");
    solve->add_option("--ymax", solve_args.ymax,
                      "square grid extent; 0 sizes the grid automatically");
    solve->add_option("--max-iters", solve_args.max_iters,
                      "iteration budget before giving up (default 200000)");
    solve->add_option("--out", solve_args.out,
                      "write the policy and relative-cost table as CSV");

    SimulateArgs sim_args;
    auto* simulate = app.add_subcommand(
        "simulate", "Estimate a policy's long-run cost from the slot simulator");
    simulate->add_option("--p", sim_args.p, "write probability, in (0,1]")
        ->required();
    simulate->add_option("--c", sim_args.c, "sampling cost, >= 0")->required();
    simulate
        ->add_option("--policy", sim_args.policy,
                     "threshold:<int> | always | never | periodic:<int>")
        ->required();
    simulate->add_option("--slots", sim_args.slots, "total slots (default 1000000)");
    simulate->add_option("--warmup", sim_args.warmup,
                         "slots discarded before measuring (default 10000)");
    simulate->add_option("--seed", sim_args.seed, "RNG seed (default 1)");
    simulate->add_option("--batches", sim_args.batches,
                         "batch count for the confidence interval (default 30)");
    simulate->add_option("--out", sim_args.out, "also write the CSV to this path");

    FiguresArgs fig_args;
    auto* figures = app.add_subcommand(
        "figures", "Write figure data tables (fig2, fig3, or fig4) as CSV");
    figures->add_option("--fig", fig_args.fig, "which table to emit")
        ->required()
        ->check(CLI::IsMember({"fig2", "fig3", "fig4"}));
    figures->add_option("--out", fig_args.outdir,
                        "output directory (default '.')");
    figures->add_option("--p", fig_args.p,
                        "write probability for fig2 (default 0.5)");
    figures->add_option("--c", fig_args.c, "sampling cost for fig2 (default 80)");
    figures
        ->add_option("--c-grid", fig_args.c_grid,
                     "comma-separated sampling costs for fig3/fig4")
        ->delimiter(',');

    VerifyArgs verify_args;
    auto* verify = app.add_subcommand(
        "verify", "Run the full cross-oracle and structural verification suite");
    verify
        ->add_option("--p-grid", verify_args.p_grid,
                     "comma-separated write probabilities")
        ->delimiter(',');
    verify
        ->add_option("--c-grid", verify_args.c_grid,
                     "comma-separated sampling costs")
        ->delimiter(',');
    verify->add_option("--seed", verify_args.seed,
                       "seed for the Monte Carlo checks (default 1729)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (closed->parsed()) return run_closed_form(closed_args);
        if (solve->parsed()) return run_solve(solve_args);
        if (simulate->parsed()) return run_simulate(sim_args);
        if (figures->parsed()) return run_figures(fig_args);
        if (verify->parsed()) return run_verify(verify_args);
    } catch (const std::invalid_argument& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return kUsageError;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return kCheckFailed;
    }
    return kUsageError;  // unreachable with require_subcommand(1)
}
