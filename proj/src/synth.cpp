#include "cidlab/synth.hpp"

#include "cidlab/rng.hpp"
#include "cidlab/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace cid {

void SyntheticConfig::check() const {
    if (volatility < 0 || product_offset_sd < 0 || spread_scale < 0 || half_spread < 0 || imbalance_price_sd < 0 ||
        system_imbalance_sd < 0)
        throw ValidationError("synthetic config: scales must be non-negative");
    if (orders_per_step < 0) throw ValidationError("synthetic config: order rate must be non-negative");
    if (!(arbitrage_probability >= 0 && arbitrage_probability <= 1))
        throw ValidationError("synthetic config: arbitrage probability outside [0, 1]");
    if (!(reversion >= 0 && reversion <= 1)) throw ValidationError("synthetic config: reversion outside [0, 1]");
    if (!(0 < volume_min && volume_min <= volume_max)) throw ValidationError("synthetic config: bad volume range");
    if (!(0 < arbitrage_volume_min && arbitrage_volume_min <= arbitrage_volume_max))
        throw ValidationError("synthetic config: bad arbitrage volume range");
    if (!(0 <= arbitrage_margin_min && arbitrage_margin_min <= arbitrage_margin_max))
        throw ValidationError("synthetic config: bad arbitrage margin range");
}

namespace {

// 2023-01-01 was a Sunday.
void calendar_of(int day_index, int& month, bool& weekend) {
    static constexpr int kMonthDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int doy = day_index % 365;
    month = 1;
    while (doy >= kMonthDays[month - 1]) doy -= kMonthDays[month++ - 1];
    const int weekday = day_index % 7;  // 0 = Sunday
    weekend = weekday == 0 || weekday == 6;
}

int hour_of(int minute) { return ((minute % 1440 + 1440) % 1440) / 60; }

}  // namespace

DayRecord synth_day(const SyntheticConfig& cfg, const MarketCalendar& calendar, int index, std::uint64_t seed) {
    cfg.check();
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(index)));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto grain_volume = [&](double lo, double hi) {
        return Volume::grain_from_mw(std::max(0.001, lo + (hi - lo) * unit(rng)));
    };

    DayRecord day;
    char name[32];
    std::snprintf(name, sizeof name, "day-%04d", index + 1);
    day.id = name;

    const int n = calendar.n_slots();
    const int K = calendar.steps();
    ExogRecord base;
    calendar_of(index, base.month, base.weekend);
    const double level = cfg.mean_price + cfg.volatility * 2.0 * normal(rng);
    for (int h = 0; h < 24; ++h)
        base.day_ahead[static_cast<std::size_t>(h)] =
            std::round(100.0 * (level + cfg.day_ahead_amplitude * std::sin(2.0 * std::numbers::pi * (h - 9) / 24.0) +
                                cfg.volatility * normal(rng))) / 100.0;

    std::vector<double> anchor(static_cast<std::size_t>(n)), mid(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        const int hour = hour_of(calendar.product(s).delivery_start);
        anchor[static_cast<std::size_t>(s)] = base.day_ahead[static_cast<std::size_t>(hour)] + cfg.product_offset_sd * normal(rng);
        mid[static_cast<std::size_t>(s)] = anchor[static_cast<std::size_t>(s)] + cfg.volatility * normal(rng);
    }

    // Quarter-hourly imbalance series over the trading window.
    const int first_minute = calendar.time_of_step(0) - 60;
    const int quarters = (calendar.time_of_step(K) - first_minute) / 15 + 1;
    std::vector<double> imb_price(static_cast<std::size_t>(quarters)), sys_imb(static_cast<std::size_t>(quarters));
    for (int q = 0; q < quarters; ++q) {
        const double z = std::clamp(normal(rng), -3.0, 3.0);
        imb_price[static_cast<std::size_t>(q)] = std::round(100.0 * (cfg.imbalance_price_mean + cfg.imbalance_price_sd * z)) / 100.0;
        sys_imb[static_cast<std::size_t>(q)] = std::round(cfg.system_imbalance_sd * normal(rng));
    }

    OrderBook shadow(n);
    OrderId next_id = 1;
    const auto emit = [&](int t, int product, Side side, double price_eur, Volume volume) {
        const Price bound_lo = shadow.bounds().min, bound_hi = shadow.bounds().max;
        Price price = Price::from_eur(price_eur);
        price = std::clamp(price, bound_lo, bound_hi);
        Order o{next_id++, product, side, volume, price, t};
        shadow.match_insert(o);
        day.arrivals.back().push_back(o);
    };

    for (int t = 0; t <= K; ++t) {
        const int minute = calendar.time_of_step(t);
        shadow.remove_closed(calendar, minute);
        ExogRecord e = base;
        e.hour = hour_of(minute);
        const int q_now = (minute - first_minute) / 15;
        for (int k = 0; k < 4; ++k) {
            const auto q = static_cast<std::size_t>(std::max(0, q_now - 4 + k));
            e.imbalance_price[static_cast<std::size_t>(k)] = imb_price[q];
            e.system_imbalance[static_cast<std::size_t>(k)] = sys_imb[q];
        }
        day.exog.push_back(e);
        day.arrivals.emplace_back();

        std::vector<int> open;
        for (const auto& p : calendar.open_products(minute)) open.push_back(p.index);
        if (t > 0)
            for (int s : open) {
                auto& m = mid[static_cast<std::size_t>(s)];
                const double a = anchor[static_cast<std::size_t>(s)];
                m = a + (1.0 - cfg.reversion) * (m - a) + cfg.volatility * normal(rng);
            }
        std::poisson_distribution<int> count(cfg.orders_per_step);
        std::exponential_distribution<double> extra(cfg.spread_scale > 0 ? 1.0 / cfg.spread_scale : 1e12);
        for (int s : open) {
            const int k = cfg.orders_per_step > 0 ? count(rng) : 0;
            for (int j = 0; j < k; ++j) {
                const Side side = unit(rng) < 0.5 ? Side::Buy : Side::Sell;
                const double dist = cfg.half_spread + (cfg.spread_scale > 0 ? extra(rng) : 0.0);
                const double m = mid[static_cast<std::size_t>(s)];
                emit(t, s, side, side == Side::Buy ? m - dist : m + dist, grain_volume(cfg.volume_min, cfg.volume_max));
            }
        }
        if (open.size() >= 2 && unit(rng) < cfg.arbitrage_probability) {
            std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
            const int a = open[pick(rng)];
            int b = open[pick(rng)];
            if (a == b) b = open[(static_cast<std::size_t>(std::find(open.begin(), open.end(), a) - open.begin()) + 1) % open.size()];
            const int lo = mid[static_cast<std::size_t>(a)] <= mid[static_cast<std::size_t>(b)] ? a : b;
            const int hi = lo == a ? b : a;
            const double margin = cfg.arbitrage_margin_min + (cfg.arbitrage_margin_max - cfg.arbitrage_margin_min) * unit(rng);
            const double centre = 0.5 * (mid[static_cast<std::size_t>(lo)] + mid[static_cast<std::size_t>(hi)]);
            double sell = centre - margin / 2, buy = centre + margin / 2;
            if (auto bb = shadow.best_bid(lo)) sell = std::max(sell, bb->eur() + 0.01);
            if (auto ba = shadow.best_ask(hi)) buy = std::min(buy, ba->eur() - 0.01);
            if (buy - sell >= 0.5 * margin && margin > 0) {
                const Volume v = grain_volume(cfg.arbitrage_volume_min, cfg.arbitrage_volume_max);
                emit(t, lo, Side::Sell, sell, v);
                emit(t, hi, Side::Buy, buy, v);
            }
        }
    }
    return day;
}

std::vector<DayRecord> synth_generate(const SyntheticConfig& config, const MarketCalendar& calendar, int days,
                                      std::uint64_t seed) {
    if (days < 0) throw ValidationError("day count must be non-negative");
    std::vector<DayRecord> out;
    out.reserve(static_cast<std::size_t>(days));
    for (int i = 0; i < days; ++i) out.push_back(synth_day(config, calendar, i, seed));
    return out;
}

}  // namespace cid
