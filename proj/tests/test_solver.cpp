#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "memsamp/closed_form.hpp"
#include "memsamp/solver.hpp"

using namespace memsamp;

TEST_CASE("grid construction and clamping") {
    CHECK_THROWS_AS(GridSpec(0, 10), std::invalid_argument);
    CHECK_THROWS_AS(GridSpec(5, 4), std::invalid_argument);

    GridSpec grid(4, 9);
    CHECK(grid.size() == 39);  // row x holds y in [max(x,1), 9]
    CHECK(grid.contains({0, 1}));
    CHECK(grid.contains({4, 9}));
    CHECK_FALSE(grid.contains({5, 9}));
    CHECK_FALSE(grid.contains({0, 10}));
    CHECK(grid.clamp({7, 12}) == AgeState{4, 9});
    CHECK(grid.clamp({2, 3}) == AgeState{2, 3});

    // Indices enumerate the wedge without gaps.
    std::vector<bool> seen(static_cast<std::size_t>(grid.size()), false);
    for (std::int64_t x = 0; x <= grid.x_max(); ++x)
        for (std::int64_t y = grid.y_lo(x); y <= grid.y_max(); ++y) {
            auto i = grid.index({x, y});
            REQUIRE(i >= 0);
            REQUIRE(i < grid.size());
            REQUIRE_FALSE(seen[static_cast<std::size_t>(i)]);
            seen[static_cast<std::size_t>(i)] = true;
        }
}

TEST_CASE("auto-sized grids keep a margin above the threshold") {
    for (double p : {0.1, 0.5, 0.9, 1.0}) {
        for (double c : {0.0, 5.0, 80.0}) {
            ModelParams m{p, c};
            auto grid = GridSpec::sized_for(m);
            auto rep = optimal_threshold(m);
            CHECK(grid.y_max() >= 8 * std::max<std::int64_t>(rep.y0_star, 1));
            CHECK(grid.y_max() >= 64);
            CHECK(grid.x_max() == grid.y_max());
        }
    }
}

TEST_CASE("discounted value iteration on the deterministic chain") {
    // With a certain writer and free sampling the client age stays 1 and the
    // value is the geometric series 1/(1-alpha).
    auto run = discounted_value_iteration(ModelParams{1.0, 0.0}, GridSpec(50, 50),
                                          0.9);
    CHECK(run.converged);
    CHECK(run.value.at({0, 1}) == Catch::Approx(10.0).margin(1e-6));
}

TEST_CASE("discounted iterates grow monotonically from zero") {
    ModelParams m{0.5, 5.0};
    GridSpec grid(32, 32);
    ValueTable previous(grid);
    std::int64_t checked = 0;
    bool monotone = true;
    IterateObserver observer = [&](std::int64_t, const ValueTable& v) {
        detail::for_each_state(grid, [&](const AgeState& s) {
            if (v.at(s) < previous.at(s) - 1e-12) monotone = false;
        });
        previous = v;
        ++checked;
    };
    auto run = discounted_value_iteration(m, grid, 0.9, 1e-8, 200000, observer);
    CHECK(run.converged);
    CHECK(checked == run.iterations);
    CHECK(monotone);
}

TEST_CASE("discounted greedy policy recovers the analytic threshold") {
    // A point with a clear margin between neighbouring thresholds; at, say,
    // (p=0.5, c=5) thresholds 2 and 3 tie exactly and either could win.
    ModelParams m{1.0, 5.0};
    REQUIRE(optimal_threshold(m).y0_star == 3);
    auto run =
        discounted_value_iteration(m, GridSpec::sized_for(m), 0.999, 1e-3);
    CHECK(run.converged);
    auto threshold = extract_threshold(run.policy);
    REQUIRE(threshold.has_value());
    CHECK(*threshold == 3);
}

TEST_CASE("discounted value iteration validates its arguments") {
    ModelParams m{0.5, 1.0};
    GridSpec grid(8, 8);
    CHECK_THROWS_AS(discounted_value_iteration(m, grid, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(discounted_value_iteration(m, grid, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(discounted_value_iteration(m, grid, 0.9, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(discounted_value_iteration(m, grid, 0.9, 1e-8, 0),
                    std::invalid_argument);
}

TEST_CASE("relative value iteration matches the closed forms") {
    SECTION("moderate sampling cost") {
        auto sol = relative_value_iteration(ModelParams{0.5, 5.0},
                                            GridSpec(200, 400));
        CHECK(sol.converged);
        CHECK(sol.gain == Catch::Approx(4.0).margin(1e-6));
        CHECK(sol.relative_cost.at({0, 1}) == 0.0);
        CHECK(sol.span_at_stop <= 1e-9);
        auto threshold = extract_threshold(sol.policy);
        REQUIRE(threshold.has_value());
        CHECK(*threshold == 2);
    }

    SECTION("deterministic writer") {
        auto sol = relative_value_iteration(ModelParams{1.0, 0.0},
                                            GridSpec::sized_for(ModelParams{1.0, 0.0}));
        CHECK(sol.converged);
        CHECK(sol.gain == 1.0);
    }

    SECTION("expensive sampling on a large grid") {
        auto sol = relative_value_iteration(ModelParams{0.5, 80.0},
                                            GridSpec(400, 800));
        CHECK(sol.converged);
        CHECK(sol.gain == Catch::Approx(13.2308).margin(1e-4));
        auto threshold = extract_threshold(sol.policy);
        REQUIRE(threshold.has_value());
        CHECK(*threshold == 12);
    }

    SECTION("iteration budget exhaustion is flagged, not thrown") {
        auto sol = relative_value_iteration(ModelParams{0.5, 5.0}, GridSpec(32, 32),
                                            1e-9, 3);
        CHECK_FALSE(sol.converged);
        CHECK(sol.iterations == 3);
    }
}

TEST_CASE("solver relative costs agree with the analytic profile") {
    for (auto [p, c] : std::vector<std::pair<double, double>>{
             {0.5, 80.0}, {0.3, 20.0}, {0.8, 20.0}}) {
        ModelParams m{p, c};
        auto rep = optimal_threshold(m);
        auto sol = relative_value_iteration(m, GridSpec::sized_for(m));
        auto profile = relative_cost_profile(m, rep.y0_star, rep.y0_star + 8);
        REQUIRE(sol.converged);
        for (std::int64_t y = 1; y <= rep.y0_star + 3; ++y)
            for (std::int64_t x = 0; x <= y; ++x) {
                AgeState s{x, y};
                if (!is_feasible_under_threshold(s, rep.y0_star)) continue;
                INFO("p=" << p << " c=" << c << " state (" << x << "," << y << ")");
                CHECK(sol.relative_cost.at(s) ==
                      Catch::Approx(profile.value_at(s)).margin(1e-3));
            }
    }
}

TEST_CASE("threshold extraction from hand-built policies") {
    GridSpec grid(10, 30);

    SECTION("all-sample row reads as threshold one") {
        PolicyTable policy(grid, Action::Sample);
        auto t = extract_threshold(policy);
        REQUIRE(t.has_value());
        CHECK(*t == 1);
    }

    SECTION("all-idle row has no threshold") {
        PolicyTable policy(grid, Action::Idle);
        CHECK_FALSE(extract_threshold(policy).has_value());
    }

    SECTION("a sample-idle-sample row is not a threshold") {
        PolicyTable policy(grid, Action::Idle);
        policy.at({0, 4}) = Action::Sample;
        policy.at({0, 5}) = Action::Idle;
        for (std::int64_t y = 6; y <= grid.y_max(); ++y)
            policy.at({0, y}) = Action::Sample;
        CHECK_FALSE(extract_threshold(policy).has_value());
    }

    SECTION("saturation band is ignored") {
        PolicyTable policy(grid, Action::Idle);
        for (std::int64_t y = 28; y <= 30; ++y) policy.at({0, y}) = Action::Sample;
        CHECK_FALSE(extract_threshold(policy).has_value());
    }
}

TEST_CASE("structure verifiers pass converged tables and catch planted defects") {
    ModelParams m{0.5, 5.0};
    GridSpec grid = GridSpec::sized_for(m);
    auto run = discounted_value_iteration(m, grid, 0.99);
    REQUIRE(run.converged);

    SECTION("converged discounted table is clean") {
        CHECK(verify_monotone(run.value).ok());
        CHECK(verify_threshold_in_y(run.policy).ok());
        CHECK(verify_concavity_in_y(run.value).ok());
        CHECK(verify_diagonal_idle(run.policy).ok());
    }

    SECTION("constant and linear tables are monotone and concave") {
        ValueTable flat(grid, 7.0);
        CHECK(verify_monotone(flat).ok());
        CHECK(verify_concavity_in_y(flat).ok());
        ValueTable linear(grid);
        detail::for_each_state(grid, [&](const AgeState& s) {
            linear.at(s) = static_cast<double>(s.x + 2 * s.y);
        });
        CHECK(verify_monotone(linear).ok());
        CHECK(verify_concavity_in_y(linear).ok());
    }

    SECTION("a decreased entry breaks monotonicity") {
        ValueTable v(grid);
        detail::for_each_state(grid, [&](const AgeState& s) {
            v.at(s) = static_cast<double>(s.x + 2 * s.y);
        });
        v.at({3, 10}) -= 5.0;  // both neighbours that look up to it now see a drop
        auto report = verify_monotone(v);
        CHECK(report.violations == 2);
        CHECK(report.worst_gap == Catch::Approx(4.0));
    }

    SECTION("a convex slice fails concavity") {
        ValueTable v(grid);
        detail::for_each_state(grid, [&](const AgeState& s) {
            v.at(s) = static_cast<double>(s.y) * static_cast<double>(s.y);
        });
        CHECK(verify_concavity_in_y(v).violations > 0);
    }

    SECTION("sample-then-idle rows fail the row check") {
        PolicyTable policy(grid, Action::Idle);
        policy.at({2, 5}) = Action::Sample;  // idle again at (2,6) onward
        auto report = verify_threshold_in_y(policy);
        CHECK(report.violations >= 1);
        CHECK(verify_threshold_in_y(PolicyTable(grid, Action::Idle)).ok());
        CHECK(verify_threshold_in_y(PolicyTable(grid, Action::Sample)).ok());
    }

    SECTION("idle followed by sample down a diagonal fails the diagonal check") {
        PolicyTable policy(grid, Action::Idle);
        policy.at({2, 4}) = Action::Sample;  // (1,3) idles before it
        auto report = verify_diagonal_idle(policy);
        CHECK(report.violations >= 1);
        CHECK(verify_diagonal_idle(PolicyTable(grid, Action::Idle)).ok());
    }
}

TEST_CASE("vanishing discount closes in on the average-cost gain") {
    SECTION("moderate cost model") {
        ModelParams m{0.5, 5.0};
        auto report =
            vanishing_discount_check(m, GridSpec::sized_for(m), {0.9, 0.99, 0.999});
        CHECK(report.converged);
        CHECK(report.gaps_decreasing);
        REQUIRE(report.points.size() == 3);
        CHECK(report.points.back().gap <= 0.05);
        CHECK(report.gain == Catch::Approx(4.0).margin(1e-6));
    }

    SECTION("deterministic chain scales to the unit gain") {
        ModelParams m{1.0, 0.0};
        auto report = vanishing_discount_check(m, GridSpec(50, 50), {0.999});
        CHECK(report.points[0].scaled_value == Catch::Approx(1.0).margin(1e-3));
    }

    SECTION("expensive sampling keeps the decreasing-gap property") {
        ModelParams m{0.5, 80.0};
        auto report =
            vanishing_discount_check(m, GridSpec::sized_for(m), {0.9, 0.99, 0.999});
        CHECK(report.converged);
        CHECK(report.gaps_decreasing);
    }

    SECTION("alpha schedules are validated") {
        ModelParams m{0.5, 5.0};
        GridSpec grid(8, 8);
        CHECK_THROWS_AS(vanishing_discount_check(m, grid, {}), std::invalid_argument);
        CHECK_THROWS_AS(vanishing_discount_check(m, grid, {1.0}),
                        std::invalid_argument);
        CHECK_THROWS_AS(vanishing_discount_check(m, grid, {0.99, 0.9}),
                        std::invalid_argument);
    }
}
