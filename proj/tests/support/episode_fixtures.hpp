#pragma once

#include "cidlab/day.hpp"
#include "cidlab/episode.hpp"

#include "../unit/fixtures.hpp"

namespace cid::testing {

// Two quarter-hours traded at -90, -60 (K = 2); slot 0 closes at -30.
inline EpisodeConfig small_env(double soc) {
    CalendarConfig cal;
    cal.n_products = 2;
    cal.gate_open = -120;
    cal.trading_start = -90;
    cal.trading_step = 30;
    cal.steps = 2;
    EpisodeConfig env;
    env.calendar = MarketCalendar(cal);
    env.storage.soc_min = 0.0;
    env.storage.soc_max = 5.0;
    env.storage.c_max = env.storage.g_max = 20.0;
    env.storage.soc_init = env.storage.soc_term = soc;
    env.history = 2;
    return env;
}

inline DayRecord empty_day(const EpisodeConfig& env, const std::string& id = "empty") {
    DayRecord d;
    d.id = id;
    const auto n = static_cast<std::size_t>(env.calendar.steps()) + 1;
    d.arrivals.resize(n);
    d.exog.resize(n);
    for (std::size_t t = 0; t < n; ++t) d.exog[t].hour = 17;
    return d;
}

// Sell 10 MW at 10 in slot 0 and Buy 10 MW at 50 in slot 1 at step 0:
// one profitable cycle worth 10 * 0.25 * 40 = 100 EUR.
inline DayRecord arbitrage_day(const EpisodeConfig& env) {
    auto d = empty_day(env, "arbitrage");
    d.arrivals[0] = {make_order(1, 0, Side::Sell, 10, 10), make_order(2, 1, Side::Buy, 10, 50)};
    return d;
}

// Trading now fills the storage for 50 EUR; waiting one step lets the agent
// sell the same energy into a higher bid for 150 EUR.
inline DayRecord waiting_day(const EpisodeConfig& env) {
    auto d = empty_day(env, "waiting");
    d.arrivals[0] = {make_order(1, 0, Side::Sell, 20, 10), make_order(2, 1, Side::Buy, 20, 20)};
    d.arrivals[1] = {make_order(3, 1, Side::Buy, 20, 40, 1)};
    return d;
}

}  // namespace cid::testing
