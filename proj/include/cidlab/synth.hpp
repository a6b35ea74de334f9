#pragma once

#include "cidlab/calendar.hpp"
#include "cidlab/day.hpp"

#include <cstdint>
#include <vector>

namespace cid {

struct SyntheticConfig {
    // Mid price per product: AR(1) around a day-ahead shape plus a product offset.
    double mean_price = 50.0;           // EUR/MWh
    double day_ahead_amplitude = 15.0;  // daily sinusoid amplitude
    double product_offset_sd = 6.0;
    double reversion = 0.2;             // per trading step
    double volatility = 2.0;            // EUR/MWh per step
    // Order flow per open product and step.
    double orders_per_step = 1.0;       // Poisson rate
    double half_spread = 1.0;           // EUR/MWh
    double spread_scale = 3.0;          // mean exponential extra distance
    double volume_min = 0.5;            // MW
    double volume_max = 8.0;
    // Sell-low / Buy-high pair across two products.
    double arbitrage_probability = 0.3; // per step
    double arbitrage_margin_min = 2.0;  // EUR/MWh
    double arbitrage_margin_max = 10.0;
    double arbitrage_volume_min = 1.0;  // MW
    double arbitrage_volume_max = 5.0;
    // Exogenous series.
    double imbalance_price_mean = 50.0;
    double imbalance_price_sd = 25.0;   // truncated at 3 sd
    double system_imbalance_sd = 300.0; // MW

    // Throws ValidationError on negative rates or inverted ranges.
    void check() const;
};

// Seeded, reproducible days "day-0001".."day-NNNN" for `calendar`. Each day
// uses its own derived seed, so day i does not depend on the day count.
std::vector<DayRecord> synth_generate(const SyntheticConfig& config, const MarketCalendar& calendar, int days,
                                      std::uint64_t seed);
DayRecord synth_day(const SyntheticConfig& config, const MarketCalendar& calendar, int index, std::uint64_t seed);

}  // namespace cid
