#include "cidlab/trade.hpp"

#include "../support/trade_oracle.hpp"
#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cid;
using cid::testing::make_order;

namespace {

// Two quarter-hour slots, both tradable at step 0.
TradeProblem two_slot_problem(double soc, std::vector<Order> orders) {
    CalendarConfig cfg;
    cfg.n_products = 2;
    cfg.trading_start = -60;
    cfg.steps = 3;
    TradeProblem p;
    p.calendar = MarketCalendar(cfg);
    p.params.soc_min = 0.0;
    p.params.soc_max = 5.0;
    p.params.c_max = p.params.g_max = 20.0;
    p.params.soc_init = p.params.soc_term = soc;
    p.position = MarketPosition::flat(2);
    p.schedule = StorageSchedule::flat(p.params, 2, 0.25);
    p.orders = std::move(orders);
    return p;
}

}  // namespace

TEST(SignVolume, FollowsRestingSide) {
    EXPECT_EQ(sign_volume(5, Side::Buy), 5.0);
    EXPECT_EQ(sign_volume(5, Side::Sell), -5.0);
    EXPECT_EQ(sign_volume(0, Side::Buy), 0.0);
    EXPECT_THROW(sign_volume(-1, Side::Buy), ValidationError);
}

TEST(SolveTrade, EmptyBookKeepsSchedule) {
    const auto p = two_slot_problem(0.0, {});
    const auto s = solve_trade(p);
    EXPECT_TRUE(s.fractions.empty());
    EXPECT_EQ(s.reward, 0.0);
    EXPECT_EQ(s.schedule.soc, p.schedule.soc);
}

TEST(SolveTrade, BuyLowSellHigh) {
    auto p = two_slot_problem(0.0, {make_order(1, 0, Side::Sell, 10, 10), make_order(2, 1, Side::Buy, 10, 50)});
    for (double eta : {1.0, 0.999}) {
        p.params.eta = eta;
        const auto s = solve_trade(p);
        if (eta == 1.0) {
            EXPECT_EQ(s.fractions.at(1), 1.0);
            EXPECT_EQ(s.fractions.at(2), 1.0);
            EXPECT_NEAR(s.reward, 100.0, 1e-9);
            EXPECT_NEAR(s.schedule.charge[0], 10.0, 1e-9);
            EXPECT_NEAR(s.schedule.discharge[1], 10.0, 1e-9);
            EXPECT_EQ(s.mode[0], 1);
            EXPECT_FALSE(s.branched);
        } else {
            EXPECT_TRUE(s.branched);
            EXPECT_GT(s.reward, 99.0);
        }
        EXPECT_NEAR(s.schedule.soc.back(), 0.0, 1e-9);
    }
}

TEST(SolveTrade, NoHeadroomNoPurchase) {
    const auto p = two_slot_problem(5.0, {make_order(1, 0, Side::Sell, 10, 10), make_order(2, 1, Side::Sell, 3, 5)});
    const auto s = solve_trade(p);
    EXPECT_EQ(s.fractions.at(1), 0.0);
    EXPECT_EQ(s.fractions.at(2), 0.0);
    EXPECT_EQ(s.reward, 0.0);
}

TEST(SolveTrade, PartialAcceptanceAtPowerLimit) {
    // 30 MW on offer but only 20 MW of charging power.
    auto p = two_slot_problem(0.0, {make_order(1, 0, Side::Sell, 30, 10), make_order(2, 1, Side::Buy, 30, 50)});
    p.params.soc_max = 100.0;
    const auto s = solve_trade(p);
    EXPECT_NEAR(s.fractions.at(1), 2.0 / 3.0, 1e-9);
    EXPECT_NEAR(s.reward, 20 * 40 * 0.25, 1e-6);
}

TEST(SolveTrade, TieBreakPrefersLessVolume) {
    // Selling into a zero-priced bid earns nothing; the solver leaves it.
    auto p = two_slot_problem(5.0, {make_order(1, 0, Side::Buy, 4, 0.0), make_order(2, 1, Side::Sell, 4, 0.0)});
    const auto s = solve_trade(p);
    EXPECT_EQ(s.fractions.at(1), 0.0);
    EXPECT_EQ(s.fractions.at(2), 0.0);
}

TEST(SolveTrade, PowerDropsDuration) {
    auto p = two_slot_problem(0.0, {make_order(1, 0, Side::Sell, 10, 10), make_order(2, 1, Side::Buy, 10, 50)});
    p.settlement = Settlement::Power;
    EXPECT_NEAR(solve_trade(p).reward, 400.0, 1e-9);
}

TEST(SolveTrade, RejectsInvalidPriorSchedule) {
    auto p = two_slot_problem(0.0, {make_order(1, 0, Side::Sell, 1, 10)});
    p.schedule.discharge[0] = 4.0;
    p.schedule.recompute_soc(p.params);
    EXPECT_THROW(solve_trade(p), ValidationError);
}

TEST(SolveTrade, RejectsClosedProduct) {
    auto p = two_slot_problem(0.0, {make_order(1, 0, Side::Sell, 1, 10)});
    p.step = 3;  // slot 0 closed at -30
    EXPECT_THROW(solve_trade(p), ValidationError);
}

TEST(SolveTrade, IdleChangesNothing) {
    const auto p = two_slot_problem(2.0, {});
    const auto s = idle(p.schedule, p.position);
    EXPECT_EQ(s.reward, 0.0);
    EXPECT_EQ(s.schedule.soc, p.schedule.soc);
    EXPECT_EQ(s.contracted, std::vector<double>(2, 0.0));
}

TEST(SolveTrade, DumpRoundTrip) {
    std::mt19937_64 rng(11);
    const auto p = cid::testing::random_trade_problem(rng, {.eta = 0.9});
    const auto q = parse_problem(dump_problem(p));
    EXPECT_EQ(dump_problem(q), dump_problem(p));
    EXPECT_NEAR(solve_trade(q).reward, solve_trade(p).reward, 1e-12);
}

TEST(SolveTrade, MatchesOracleOnRandomInstances) {
    std::mt19937_64 rng(2024);
    int profitable = 0;
    for (int trial = 0; trial < 120; ++trial) {
        cid::testing::InstanceSpec spec;
        spec.eta = trial % 2 ? 0.9 : 1.0;
        spec.minimums = trial % 3 == 0;
        const auto p = cid::testing::random_trade_problem(rng, spec);
        const auto oracle = cid::testing::brute_force_trade(p);
        ASSERT_TRUE(oracle.feasible) << dump_problem(p);
        const auto s = solve_trade(p);
        EXPECT_NEAR(s.reward, oracle.objective, 1e-6) << "trial " << trial << "\n" << dump_problem(p);
        EXPECT_GE(s.reward, -1e-9);
        profitable += oracle.objective > 1.0;
    }
    EXPECT_GT(profitable, 25);
}

TEST(SolveTrade, RelaxationMatchesBranching) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 60; ++trial) {
        const auto p = cid::testing::random_trade_problem(rng, {});
        TradeOptions forced;
        forced.force_branching = true;
        const auto fast = solve_trade(p);
        const auto bb = solve_trade(p, forced);
        EXPECT_FALSE(fast.branched);
        if (!p.orders.empty()) EXPECT_TRUE(bb.branched);
        EXPECT_NEAR(fast.reward, bb.reward, 1e-9) << dump_problem(p);
    }
}

TEST(SolveTrade, DominatedOrderNeverHurts) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        auto p = cid::testing::random_trade_problem(rng, {.eta = trial % 2 ? 0.9 : 1.0});
        if (p.orders.empty()) continue;
        const double before = solve_trade(p).reward;
        Order extra = p.orders.front();
        extra.id = 1000;
        extra.price = Price::from_ticks(extra.price.ticks() + (extra.side == Side::Buy ? -100 : 100));
        p.orders.push_back(extra);
        EXPECT_GE(solve_trade(p).reward, before - 1e-9);
    }
}

TEST(SolveTrade, AppliedSolutionLeavesNoImbalance) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 60; ++trial) {
        auto p = cid::testing::random_trade_problem(rng, {.eta = trial % 2 ? 0.9 : 1.0, .minimums = trial % 4 == 0});
        OrderBook book(p.calendar.n_slots());
        for (const auto& o : p.orders) book.match_insert(o);
        const auto s = solve_trade(p);
        const auto acc = book.apply_acceptance(s.fractions, p.calendar);
        EXPECT_NEAR(acc.cash_eur, s.reward, 1e-9);
        auto pos = p.position;
        auto sched = p.schedule;
        update_after_clear(pos, sched, p.params, p.calendar, p.minute(), acc.contracted_mw(), s.d_discharge, s.d_charge);
        for (double d : pos.imbalance) EXPECT_NEAR(d, 0.0, 1e-9);
        EXPECT_TRUE(validate(sched, p.params).empty());
    }
}
