#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "memsamp/closed_form.hpp"
#include "memsamp/simulate.hpp"
#include "memsamp/stats.hpp"

using namespace memsamp;

TEST_CASE("running statistics accumulate mean, variance, and intervals") {
    SampleStats stats;
    CHECK(stats.count() == 0);
    CHECK(stats.mean() == 0.0);
    CHECK(stats.variance() == 0.0);
    CHECK(stats.ci_halfwidth() == 0.0);

    for (double v : {1.0, 2.0, 3.0, 4.0, 5.0}) stats.add(v);
    CHECK(stats.count() == 5);
    CHECK(stats.mean() == 3.0);
    CHECK(stats.variance() == Catch::Approx(2.5).epsilon(1e-14));
    CHECK(stats.ci_halfwidth() ==
          Catch::Approx(student_t_975(4) * std::sqrt(2.5 / 5.0)).epsilon(1e-14));
}

TEST_CASE("student-t quantiles cover the tabulated and asymptotic ranges") {
    CHECK(student_t_975(1) == Catch::Approx(12.7062));
    CHECK(student_t_975(30) == Catch::Approx(2.04227));
    CHECK(student_t_975(1000) > 1.9599);
    CHECK(student_t_975(1000) < 1.97);
    CHECK_THROWS_AS(student_t_975(0), std::invalid_argument);
}

TEST_CASE("policy grammar parses and round-trips") {
    CHECK(std::holds_alternative<AlwaysSamplePolicy>(parse_policy("always")));
    CHECK(std::holds_alternative<NeverSamplePolicy>(parse_policy("never")));
    CHECK(std::get<ThresholdPolicy>(parse_policy("threshold:2")).threshold == 2);
    CHECK(std::get<PeriodicPolicy>(parse_policy("periodic:3")).period == 3);

    for (const std::string text :
         {"threshold:2", "always", "never", "periodic:3"})
        CHECK(policy_label(parse_policy(text)) == text);

    CHECK_THROWS_AS(parse_policy("threshold:0"), std::invalid_argument);
    CHECK_THROWS_AS(parse_policy("periodic:0"), std::invalid_argument);
    CHECK_THROWS_AS(parse_policy("threshold:"), std::invalid_argument);
    CHECK_THROWS_AS(parse_policy("threshold:x"), std::invalid_argument);
    CHECK_THROWS_AS(parse_policy("periodic:2x"), std::invalid_argument);
    CHECK_THROWS_AS(parse_policy("banana"), std::invalid_argument);
    CHECK_THROWS_AS(parse_policy(""), std::invalid_argument);
}

TEST_CASE("policies map states and slots to actions") {
    SECTION("threshold compares the age gap") {
        PolicySpec policy = ThresholdPolicy{2};
        CHECK(policy_action(policy, {0, 1}, 0) == Action::Idle);
        CHECK(policy_action(policy, {0, 2}, 0) == Action::Sample);
        CHECK(policy_action(policy, {1, 3}, 7) == Action::Sample);
        CHECK(policy_action(policy, {2, 3}, 7) == Action::Idle);
    }

    SECTION("always and never ignore everything") {
        CHECK(policy_action(AlwaysSamplePolicy{}, {5, 9}, 3) == Action::Sample);
        CHECK(policy_action(NeverSamplePolicy{}, {0, 2}, 3) == Action::Idle);
    }

    SECTION("periodic fires on every period-th slot") {
        PolicySpec policy = PeriodicPolicy{3};
        CHECK(policy_action(policy, {0, 1}, 0) == Action::Idle);
        CHECK(policy_action(policy, {0, 1}, 1) == Action::Idle);
        CHECK(policy_action(policy, {0, 1}, 2) == Action::Sample);
        CHECK(policy_action(policy, {0, 1}, 5) == Action::Sample);
    }

    SECTION("table policies clamp off-grid states") {
        GridSpec grid(4, 8);
        PolicyTable table(grid, Action::Sample);
        PolicySpec policy = TablePolicy{table};
        CHECK(policy_action(policy, {50, 60}, 0) == Action::Sample);
    }
}

TEST_CASE("simulation of the deterministic chain is exact") {
    // Certain writer, always sampling: the client age is pinned at one and
    // every slot costs 1 + c.
    SimConfig config;
    config.slots = 1000;
    config.warmup = 100;
    config.batches = 30;
    auto est = simulate(ModelParams{1.0, 3.0}, AlwaysSamplePolicy{}, config);
    CHECK(est.mean_cost == 4.0);
    CHECK(est.ci_halfwidth == 0.0);
    CHECK(est.mean_age == 1.0);
    CHECK(est.sample_rate == 1.0);
    CHECK_FALSE(est.age_divergent);
}

TEST_CASE("simulation runs are reproducible per seed") {
    ModelParams m{0.5, 5.0};
    SimConfig config;
    config.slots = 10000;
    config.warmup = 1000;
    config.batches = 30;
    config.seed = 42;
    auto a = simulate(m, ThresholdPolicy{2}, config);
    auto b = simulate(m, ThresholdPolicy{2}, config);
    CHECK(a.mean_cost == b.mean_cost);
    CHECK(a.mean_age == b.mean_age);
    CHECK(a.sample_rate == b.sample_rate);
    CHECK(a.seed == 42);

    config.seed = 43;
    auto other = simulate(m, ThresholdPolicy{2}, config);
    CHECK(a.mean_cost != other.mean_cost);
}

TEST_CASE("single-step sampling reproduces the kernel frequencies") {
    ModelParams m{0.3, 0.0};
    std::mt19937_64 rng(123);
    const AgeState from{3, 5};
    const std::int64_t draws = 100000;
    std::int64_t writes = 0;
    for (std::int64_t i = 0; i < draws; ++i) {
        AgeState next = detail::step(from, Action::Idle, m, rng);
        if (next == AgeState{0, 6}) ++writes;
        else REQUIRE(next == AgeState{4, 6});
    }
    const double freq = static_cast<double>(writes) / static_cast<double>(draws);
    const double sigma = std::sqrt(0.3 * 0.7 / static_cast<double>(draws));
    CHECK(std::abs(freq - 0.3) <= 4.0 * sigma);
}

TEST_CASE("simulation configs are validated") {
    SimConfig config;
    config.slots = 0;
    CHECK_THROWS_AS(validate(config), std::invalid_argument);
    config = SimConfig{};
    config.warmup = config.slots;
    CHECK_THROWS_AS(validate(config), std::invalid_argument);
    config = SimConfig{};
    config.warmup = -1;
    CHECK_THROWS_AS(validate(config), std::invalid_argument);
    config = SimConfig{};
    config.batches = 1;
    CHECK_THROWS_AS(validate(config), std::invalid_argument);
    config = SimConfig{};
    config.slots = 1001;
    config.warmup = 0;
    config.batches = 30;
    CHECK_THROWS_AS(simulate(ModelParams{0.5, 0.0}, AlwaysSamplePolicy{}, config),
                    std::invalid_argument);
}

TEST_CASE("threshold simulation agrees with the analytic average cost") {
    ModelParams m{0.5, 5.0};
    SimConfig config;
    config.slots = 200000;
    config.warmup = 10000;
    config.batches = 19;
    config.seed = 7;
    auto est = simulate(m, ThresholdPolicy{2}, config);
    const double expected = threshold_average_cost(2, m);
    REQUIRE(est.ci_halfwidth > 0.0);
    CHECK(std::abs(est.mean_cost - expected) <= 3.0 * est.ci_halfwidth);
}

TEST_CASE("mean age orders policies from eager to absent") {
    ModelParams m{0.5, 5.0};
    SimConfig config;
    config.slots = 100000;
    config.warmup = 10000;
    config.batches = 30;
    config.seed = 11;
    auto eager = simulate(m, AlwaysSamplePolicy{}, config);
    auto lazy = simulate(m, ThresholdPolicy{2}, config);
    auto absent = simulate(m, NeverSamplePolicy{}, config);
    CHECK(eager.mean_age < lazy.mean_age);
    CHECK(lazy.mean_age < absent.mean_age);
    CHECK(eager.sample_rate == 1.0);
    CHECK(absent.sample_rate == 0.0);
    CHECK_FALSE(eager.age_divergent);
    CHECK_FALSE(lazy.age_divergent);
    CHECK(absent.age_divergent);
}

TEST_CASE("parameter sweeps carry per-point seeds and never abort") {
    std::vector<ModelParams> points{{0.5, 5.0}, {0.3, 1.0}, {1.0, 0.0}};
    SimConfig base;
    base.slots = 2000;
    base.warmup = 200;
    base.batches = 30;
    base.seed = 99;
    auto results = sweep_simulate(
        points,
        [](const ModelParams& m) -> PolicySpec {
            return ThresholdPolicy{optimal_threshold(m).y0_star};
        },
        base);
    REQUIRE(results.size() == 3);
    for (std::size_t i = 0; i < results.size(); ++i) {
        INFO("point " << i);
        REQUIRE(results[i].estimate.has_value());
        CHECK(results[i].error.empty());
        CHECK(results[i].estimate->seed == (99u ^ static_cast<std::uint64_t>(i)));
    }
}

TEST_CASE("first passage simulation hits known targets") {
    SECTION("deterministic writer gives exact passage costs") {
        auto est = first_passage_monte_carlo(ModelParams{1.0, 0.0}, {1, 1}, 50, 5);
        CHECK(est.mean == 3.0);
        CHECK(est.ci_halfwidth == 0.0);
        CHECK(est.episodes == 50);
        CHECK(est.aborted == 0);
    }

    SECTION("a start at the reset state measures the first return") {
        auto est = first_passage_monte_carlo(ModelParams{1.0, 0.0}, {0, 1}, 20, 5);
        CHECK(est.mean == 1.0);
        CHECK(est.aborted == 0);
    }

    SECTION("diagonal starts match the closed form") {
        ModelParams m{0.5, 0.0};
        auto est = first_passage_monte_carlo(m, {2, 2}, 50000, 314);
        REQUIRE(est.aborted == 0);
        REQUIRE(est.ci_halfwidth > 0.0);
        CHECK(std::abs(est.mean - first_passage_cost({2, 2}, m)) <=
              3.0 * est.ci_halfwidth);
    }

    SECTION("off-diagonal starts sit below the closed form by the slack") {
        ModelParams m{0.5, 0.0};
        const AgeState start{1, 3};
        auto est = first_passage_monte_carlo(m, start, 50000, 314);
        REQUIRE(est.aborted == 0);
        const double slack =
            m.pbar() / m.p * static_cast<double>(start.y - start.x);
        CHECK(std::abs(est.mean - (first_passage_cost(start, m) - slack)) <=
              3.0 * est.ci_halfwidth);
    }

    SECTION("episodes that cannot finish under the cap are aborted") {
        auto est = first_passage_monte_carlo(ModelParams{0.5, 0.0}, {5, 5}, 20, 5, 1);
        CHECK(est.aborted == 20);
        CHECK(est.episodes == 0);
        CHECK(est.mean == 0.0);
    }

    SECTION("arguments are validated") {
        ModelParams m{0.5, 0.0};
        CHECK_THROWS_AS(first_passage_monte_carlo(m, {2, 1}, 10, 1),
                        std::invalid_argument);
        CHECK_THROWS_AS(first_passage_monte_carlo(m, {1, 1}, 0, 1),
                        std::invalid_argument);
        CHECK_THROWS_AS(first_passage_monte_carlo(m, {1, 1}, 10, 1, 0),
                        std::invalid_argument);
    }
}
