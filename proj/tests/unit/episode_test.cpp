#include "cidlab/episode.hpp"
#include "cidlab/synth.hpp"

#include "../support/episode_fixtures.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cid;
using cid::testing::small_env;

TEST(Episode, RollingIntrinsicOnArbitrageDay) {
    const auto env = small_env(0.0);
    const auto day = cid::testing::arbitrage_day(env);
    validate_day(day, env.calendar);
    const auto r = rolling_intrinsic(day, env);
    EXPECT_EQ(r.day, "arbitrage");
    EXPECT_EQ(r.policy, "ri");
    EXPECT_NEAR(r.value, 100.0, 1e-9);
}

TEST(Episode, IdleEarnsNothing) {
    const auto env = small_env(0.0);
    const auto tr = run_episode(cid::testing::arbitrage_day(env), env, constant_policy(Action::Idle));
    EXPECT_EQ(tr.total(), 0.0);
    ASSERT_EQ(tr.steps(), 2);
    EXPECT_EQ(tr.observations.size(), 3u);
    for (const auto& o : tr.observations) EXPECT_EQ(o.size(), static_cast<std::size_t>(StepObservation::width(2)));
}

TEST(Episode, WaitingDayRewardsPatience) {
    const auto env = small_env(0.0);
    const auto day = cid::testing::waiting_day(env);
    validate_day(day, env.calendar);
    EXPECT_NEAR(rolling_intrinsic(day, env).value, 50.0, 1e-9);
    const Policy wait = [](int t, const PseudoState&) { return t == 0 ? Action::Idle : Action::Trade; };
    EXPECT_NEAR(run_policy(day, wait, "wait", env).value, 150.0, 1e-9);
}

TEST(Episode, UnprofitableBookEarnsZero) {
    const auto env = small_env(2.0);
    auto day = cid::testing::empty_day(env);
    // Bids below asks in every slot: nothing to arbitrage.
    day.arrivals[0] = {cid::testing::make_order(1, 0, Side::Buy, 5, 20), cid::testing::make_order(2, 1, Side::Sell, 5, 30)};
    const auto tr = run_episode(day, env, constant_policy(Action::Trade));
    EXPECT_EQ(tr.total(), 0.0);
}

TEST(Episode, ObservationCarriesPreviousStep) {
    const auto env = small_env(0.0);
    const auto tr = run_episode(cid::testing::arbitrage_day(env), env, constant_policy(Action::Trade));
    const int w = StepObservation::width(2);
    const auto& o1 = tr.observations[1];
    EXPECT_EQ(o1[static_cast<std::size_t>(w - 3)], 1.0);  // previous action Trade
    EXPECT_EQ(o1[static_cast<std::size_t>(w - 2)], 0.0);
    EXPECT_NEAR(o1[static_cast<std::size_t>(w - 1)], 100.0, 1e-9);
    // P_mar: bought 10 MW in slot 0, sold 10 MW in slot 1.
    EXPECT_NEAR(o1[12], -10.0, 1e-9);
    EXPECT_NEAR(o1[13], 10.0, 1e-9);
    const auto z = tr.state(1, 2);
    EXPECT_EQ(std::vector<double>(z.values.begin() + w, z.values.end()), o1);
}

TEST(Episode, RejectsDayOfWrongLength) {
    const auto env = small_env(0.0);
    auto day = cid::testing::empty_day(env);
    day.exog.pop_back();
    day.arrivals.pop_back();
    EXPECT_THROW(run_episode(day, env, constant_policy(Action::Idle)), ValidationError);
}

TEST(Episode, RollingIntrinsicOnSyntheticDays) {
    EpisodeConfig env;
    const auto days = synth_generate(SyntheticConfig{}, env.calendar, 3, 42);
    double total = 0.0;
    for (const auto& d : days) {
        const auto tr = run_episode(d, env, constant_policy(Action::Trade));
        for (double r : tr.rewards) EXPECT_GE(r, -1e-9);
        total += tr.total();
    }
    EXPECT_GT(total, 0.0);
}

TEST(Episode, SeededStochasticPolicyIsReproducible) {
    EpisodeConfig env;
    const auto day = synth_day(SyntheticConfig{}, env.calendar, 1, 9);
    auto run = [&] {
        std::mt19937_64 rng(5);
        return run_episode(day, env, [&](int, const PseudoState&) { return rng() & 1 ? Action::Trade : Action::Idle; });
    };
    EXPECT_EQ(run(), run());
}
