#pragma once

#include <vector>

namespace cid {

// Times are minutes relative to 00:00 of the delivery day; trading on the
// previous afternoon therefore has negative timestamps.
struct Product {
    int index = 0;
    int delivery_start = 0;
    double duration_h = 0.25;
    int gate_open = 0;
    int gate_close = 0;
};

struct CalendarConfig {
    int n_products = 96;
    int product_minutes = 15;
    int first_delivery = 0;
    int gate_open = -480;        // 16:00 on D-1 for quarter-hours
    int gate_close_lead = 30;
    int trading_start = -420;    // 17:00 on D-1
    int trading_step = 15;
    int steps = 40;              // K
};

// Quarterly-only calendar: product index and delivery slot index coincide.
class MarketCalendar {
public:
    MarketCalendar() : MarketCalendar(CalendarConfig{}) {}
    explicit MarketCalendar(const CalendarConfig& cfg);

    // 96 quarter-hours, 17:00 to 03:00 in 15 min steps (K = 40).
    static MarketCalendar full_case() { return MarketCalendar(CalendarConfig{}); }
    // Desk-scale default for synthetic days: 16 quarter-hours from 00:00,
    // traded from 18:00 on D-1 in 30 min steps (K = 12).
    static MarketCalendar desk_case();

    const CalendarConfig& config() const { return cfg_; }
    const std::vector<Product>& products() const { return products_; }
    const Product& product(int index) const { return products_.at(static_cast<std::size_t>(index)); }
    int n_slots() const { return cfg_.n_products; }
    int steps() const { return cfg_.steps; }
    double slot_hours() const { return cfg_.product_minutes / 60.0; }
    double trading_step_hours() const { return cfg_.trading_step / 60.0; }

    // K + 1 decision times.
    std::vector<int> trading_times() const;
    int time_of_step(int step) const;
    // Throws HorizonError for minutes off the trading grid.
    int step_of_time(int minute) const;

    std::vector<int> delivery_slots() const;
    int tau_init() const { return cfg_.first_delivery; }
    int tau_term() const { return cfg_.first_delivery + cfg_.n_products * cfg_.product_minutes; }
    std::vector<int> settlement_times() const;

    std::vector<Product> open_products(int minute) const;
    std::vector<Product> open_products_at_step(int step) const { return open_products(time_of_step(step)); }
    bool is_open(int product, int minute) const;
    // Slots whose delivery has not started at `minute`.
    bool is_adjustable(int slot, int minute) const;

private:
    CalendarConfig cfg_;
    std::vector<Product> products_;
};

}  // namespace cid
