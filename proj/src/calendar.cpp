#include "cidlab/calendar.hpp"

#include "cidlab/types.hpp"

#include <string>

namespace cid {

MarketCalendar::MarketCalendar(const CalendarConfig& cfg) : cfg_(cfg) {
    if (cfg.n_products < 1) throw ValidationError("calendar needs at least one product");
    if (cfg.product_minutes <= 0 || cfg.trading_step <= 0) throw ValidationError("calendar steps must be positive");
    if (cfg.steps < 1) throw ValidationError("calendar needs at least one trading step");
    products_.reserve(static_cast<std::size_t>(cfg.n_products));
    for (int i = 0; i < cfg.n_products; ++i) {
        Product p;
        p.index = i;
        p.delivery_start = cfg.first_delivery + i * cfg.product_minutes;
        p.duration_h = cfg.product_minutes / 60.0;
        p.gate_open = cfg.gate_open;
        p.gate_close = p.delivery_start - cfg.gate_close_lead;
        if (p.gate_open >= p.gate_close)
            throw ValidationError("product " + std::to_string(i) + " closes before it opens");
        products_.push_back(p);
    }
}

std::vector<int> MarketCalendar::trading_times() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(cfg_.steps + 1));
    for (int k = 0; k <= cfg_.steps; ++k) out.push_back(time_of_step(k));
    return out;
}

int MarketCalendar::time_of_step(int step) const {
    if (step < 0 || step > cfg_.steps)
        throw HorizonError("trading step " + std::to_string(step) + " outside [0, " + std::to_string(cfg_.steps) + "]");
    return cfg_.trading_start + step * cfg_.trading_step;
}

int MarketCalendar::step_of_time(int minute) const {
    const int offset = minute - cfg_.trading_start;
    if (offset < 0 || offset % cfg_.trading_step != 0 || offset / cfg_.trading_step > cfg_.steps)
        throw HorizonError("time " + std::to_string(minute) + " is not a trading step");
    return offset / cfg_.trading_step;
}

std::vector<int> MarketCalendar::delivery_slots() const {
    std::vector<int> out;
    for (const auto& p : products_) out.push_back(p.delivery_start);
    return out;
}

std::vector<int> MarketCalendar::settlement_times() const {
    std::vector<int> out;
    for (const auto& p : products_) out.push_back(p.delivery_start + cfg_.product_minutes);
    return out;
}

std::vector<Product> MarketCalendar::open_products(int minute) const {
    step_of_time(minute);
    std::vector<Product> out;
    for (const auto& p : products_)
        if (minute <= p.gate_close) out.push_back(p);
    return out;
}

bool MarketCalendar::is_open(int product, int minute) const {
    const auto& p = this->product(product);
    return minute <= p.gate_close;
}

bool MarketCalendar::is_adjustable(int slot, int minute) const {
    return minute <= product(slot).delivery_start;
}

MarketCalendar MarketCalendar::desk_case() {
    CalendarConfig cfg;
    cfg.n_products = 16;
    cfg.trading_start = -360;
    cfg.trading_step = 30;
    cfg.steps = 12;
    return MarketCalendar(cfg);
}

}  // namespace cid
