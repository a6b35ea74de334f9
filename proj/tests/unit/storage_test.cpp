#include "cidlab/storage.hpp"
#include "cidlab/types.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>

using namespace cid;

namespace {

MarketCalendar small_calendar(int n = 4) {
    CalendarConfig cfg;
    cfg.n_products = n;
    return MarketCalendar(cfg);
}

StorageParams small_battery() {
    StorageParams p;
    p.soc_max = 200.0;
    p.soc_init = p.soc_term = 100.0;
    p.c_max = p.g_max = 200.0;
    return p;
}

}  // namespace

TEST(Storage, BuyFillCoveredByCharging) {
    const auto cal = small_calendar();
    const auto params = small_battery();
    auto pos = MarketPosition::flat(4);
    auto sched = StorageSchedule::flat(params, 4, 0.25);
    std::vector<double> v{-10, 0, 0, 0}, dg(4, 0.0), dc{10, 0, 0, 0};
    update_after_clear(pos, sched, params, cal, -420, v, dg, dc);
    EXPECT_DOUBLE_EQ(pos.contracted[0], -10.0);
    EXPECT_DOUBLE_EQ(sched.charge[0], 10.0);
    EXPECT_DOUBLE_EQ(pos.imbalance[0], 0.0);
    EXPECT_DOUBLE_EQ(sched.soc[1], 102.5);
}

TEST(Storage, ZeroInputsIdentity) {
    const auto cal = small_calendar();
    const auto params = small_battery();
    auto pos = MarketPosition::flat(4);
    auto sched = StorageSchedule::flat(params, 4, 0.25);
    const auto pos0 = pos;
    const auto sched0 = sched;
    const std::vector<double> zero(4, 0.0);
    update_after_clear(pos, sched, params, cal, -420, zero, zero, zero);
    EXPECT_EQ(pos.contracted, pos0.contracted);
    EXPECT_EQ(pos.imbalance, pos0.imbalance);
    EXPECT_EQ(sched.soc, sched0.soc);
    EXPECT_EQ(sched.charge, sched0.charge);
}

TEST(Storage, SellFillCoveredByDischarge) {
    const auto cal = small_calendar();
    const auto params = small_battery();
    auto pos = MarketPosition::flat(4);
    auto sched = StorageSchedule::flat(params, 4, 0.25);
    update_after_clear(pos, sched, params, cal, -420, {5, 0, 0, 0}, {5, 0, 0, 0}, {0, 0, 0, 0});
    EXPECT_DOUBLE_EQ(pos.imbalance[0], 0.0);
    EXPECT_DOUBLE_EQ(pos.contracted[0], 5.0);
}

TEST(Storage, PowerLimitViolationNamesSlots) {
    const auto cal = small_calendar();
    auto params = small_battery();
    params.c_max = 20.0;
    auto pos = MarketPosition::flat(4);
    auto sched = StorageSchedule::flat(params, 4, 0.25);
    try {
        update_after_clear(pos, sched, params, cal, -420, {0, 0, -30, 0}, {0, 0, 0, 0}, {0, 0, 30, 0});
        FAIL() << "expected ScheduleError";
    } catch (const ScheduleError& e) {
        EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
    }
}

TEST(Storage, DeliveredSlotsAreFrozen) {
    const auto cal = small_calendar();
    const auto params = small_battery();
    auto pos = MarketPosition::flat(4);
    auto sched = StorageSchedule::flat(params, 4, 0.25);
    // At 00:15 the first slot is being delivered.
    EXPECT_THROW(update_after_clear(pos, sched, params, cal, 15, {1, 0, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 0}),
                 ScheduleError);
    EXPECT_NO_THROW(update_after_clear(pos, sched, params, cal, 15, {0, 1, 0, 0}, {0, 1, 0, 0}, {0, 0, 0, 0}));
}

TEST(Storage, DefaultStrategyChargesForPurchase) {
    const auto cal = small_calendar();
    const auto params = small_battery();
    auto pos = MarketPosition::flat(4);
    pos.contracted[0] = -10.0;
    const auto sched = StorageSchedule::flat(params, 4, 0.25);
    const auto adj = default_adjustments(pos, sched, params, cal, -420);
    EXPECT_DOUBLE_EQ(adj.charge[0], 10.0);
    EXPECT_DOUBLE_EQ(adj.discharge[0], 0.0);
    EXPECT_DOUBLE_EQ(adj.residual_imbalance, 0.0);
}

TEST(Storage, DefaultStrategyZeroFill) {
    const auto cal = small_calendar();
    const auto params = small_battery();
    const auto adj = default_adjustments(MarketPosition::flat(4), StorageSchedule::flat(params, 4, 0.25), params, cal, -420);
    for (int i = 0; i < 4; ++i) {
        EXPECT_EQ(adj.charge[i], 0.0);
        EXPECT_EQ(adj.discharge[i], 0.0);
    }
}

TEST(Storage, DefaultStrategyDischargesForSale) {
    const auto cal = small_calendar();
    const auto params = small_battery();
    auto pos = MarketPosition::flat(4);
    pos.contracted[0] = 10.0;
    const auto sched = StorageSchedule::flat(params, 4, 0.25);
    ASSERT_GE(sched.soc[0], 2.5);
    const auto adj = default_adjustments(pos, sched, params, cal, -420);
    EXPECT_DOUBLE_EQ(adj.discharge[0], 10.0);
    EXPECT_DOUBLE_EQ(adj.residual_imbalance, 0.0);
}

TEST(Storage, DefaultStrategyReportsResidual) {
    const auto cal = small_calendar();
    auto params = small_battery();
    params.g_max = 4.0;
    auto pos = MarketPosition::flat(4);
    pos.contracted[1] = 10.0;
    const auto adj = default_adjustments(pos, StorageSchedule::flat(params, 4, 0.25), params, cal, -420);
    EXPECT_DOUBLE_EQ(adj.discharge[1], 4.0);
    EXPECT_DOUBLE_EQ(adj.residual_imbalance, 6.0);
}

TEST(Storage, ValidateClean) {
    const auto params = small_battery();
    EXPECT_TRUE(validate(StorageSchedule::flat(params, 4, 0.25), params).empty());
}

TEST(Storage, ValidateSocAboveMax) {
    const auto params = small_battery();
    auto s = StorageSchedule::flat(params, 4, 0.25);
    s.soc[2] = 210.0;
    const auto v = validate(s, params);
    bool named = false;
    for (const auto& msg : v)
        if (msg.find("outside limits at slot 2") != std::string::npos) named = true;
    EXPECT_TRUE(named);
}

TEST(Storage, ValidateChargeAboveMax) {
    const auto params = small_battery();
    auto s = StorageSchedule::flat(params, 4, 0.25);
    s.charge[1] = 250.0;
    s.discharge[2] = 250.0;
    s.recompute_soc(params);
    const auto v = validate(s, params);
    ASSERT_EQ(v.size(), 2u);
    EXPECT_NE(v[0].find("charge outside limits"), std::string::npos);
}

// Delta by increments equals P_res - P_mar recomputed from scratch, and the SoC
// change telescopes into the sum of slot energies.
TEST(Storage, ImbalanceIdentityAndTelescoping) {
    const auto cal = small_calendar(6);
    auto params = small_battery();
    params.eta = 0.9;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    auto pos = MarketPosition::flat(6);
    auto sched = StorageSchedule::flat(params, 6, 0.25);
    for (int step = 0; step < 30; ++step) {
        std::vector<double> v(6), dg(6), dc(6);
        for (int i = 0; i < 6; ++i) {
            v[i] = u(rng);
            // keep one mode per slot
            const double g = std::max(0.0, sched.discharge[i] - sched.charge[i] + u(rng));
            const double c = g > 0 ? 0.0 : std::max(0.0, u(rng));
            dg[i] = g - sched.discharge[i];
            dc[i] = c - sched.charge[i];
        }
        update_after_clear(pos, sched, params, cal, -420, v, dg, dc);
        for (int i = 0; i < 6; ++i)
            EXPECT_NEAR(pos.imbalance[i], sched.discharge[i] - sched.charge[i] - pos.contracted[i], 1e-9);
        double energy = 0.0;
        for (int i = 0; i < 6; ++i) energy += params.eta * sched.charge[i] - sched.discharge[i] / params.eta;
        EXPECT_NEAR(sched.soc.back() - sched.soc.front(), 0.25 * energy, 1e-9);
    }
}

TEST(Storage, ParamsCheck) {
    StorageParams p;
    EXPECT_NO_THROW(p.check());
    p.soc_init = 250.0;
    EXPECT_THROW(p.check(), ValidationError);
    p = StorageParams{};
    p.eta = 0.0;
    EXPECT_THROW(p.check(), ValidationError);
}
