#include "cidlab/features.hpp"

#include <algorithm>
#include <cmath>

namespace cid {

namespace {

// First point whose cumulative volume reaches pct/100 of the total; exact in
// integer units.
const DepthPoint& percentile_point(const DepthCurve& curve, int pct) {
    const __int128 total = curve.back().cumulative.units();
    for (const auto& pt : curve)
        if (static_cast<__int128>(pt.cumulative.units()) * 100 >= total * pct) return pt;
    return curve.back();
}

}  // namespace

CurveSummary summarize(const DepthCurve& curve) {
    CurveSummary s;
    if (curve.empty()) return s;
    s.p_first = curve.front().price.eur();
    s.v_first = curve.front().cumulative.mw();
    double weighted = 0.0;
    double cum_sum = 0.0;
    Volume prev{};
    for (const auto& pt : curve) {
        weighted += pt.price.eur() * (pt.cumulative - prev).mw();
        cum_sum += pt.cumulative.mw();
        prev = pt.cumulative;
    }
    s.p_mean = weighted / curve.back().cumulative.mw();
    s.v_mean = cum_sum / static_cast<double>(curve.size());
    const auto& q25 = percentile_point(curve, 25);
    const auto& q50 = percentile_point(curve, 50);
    const auto& q75 = percentile_point(curve, 75);
    s.p25 = q25.price.eur();
    s.p50 = q50.price.eur();
    s.p75 = q75.price.eur();
    s.v25 = q25.cumulative.mw();
    s.v50 = q50.cumulative.mw();
    s.v75 = q75.cumulative.mw();
    return s;
}

BookFeatures book_features(const OrderBook& book) {
    const auto buy_curve = aggregate_depth(book, Side::Buy);
    const auto sell_curve = aggregate_depth(book, Side::Sell);
    BookFeatures f;
    f.empty_buy = buy_curve.empty();
    f.empty_sell = sell_curve.empty();
    if (f.empty_buy || f.empty_sell) return f;
    const auto b = summarize(buy_curve);
    const auto s = summarize(sell_curve);
    f.d = {b.p_first - s.p_first,
           b.p_mean - s.p_mean,
           b.p25 - s.p75,
           b.p50 - s.p50,
           b.p75 - s.p25,
           std::abs(b.v_first - s.v_first),
           std::abs(b.v_mean - s.v_mean),
           std::abs(b.v25 - s.v25),
           std::abs(b.v50 - s.v50),
           std::abs(b.v75 - s.v75)};
    return f;
}

std::vector<double> StepObservation::flatten() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(width(static_cast<int>(contracted.size()))));
    out.insert(out.end(), book.d.begin(), book.d.end());
    out.push_back(book.empty_buy ? 1.0 : 0.0);
    out.push_back(book.empty_sell ? 1.0 : 0.0);
    out.insert(out.end(), contracted.begin(), contracted.end());
    out.insert(out.end(), exog.day_ahead.begin(), exog.day_ahead.end());
    out.insert(out.end(), exog.imbalance_price.begin(), exog.imbalance_price.end());
    out.insert(out.end(), exog.system_imbalance.begin(), exog.system_imbalance.end());
    out.push_back(exog.hour);
    out.push_back(exog.month);
    out.push_back(exog.weekend ? 1.0 : 0.0);
    out.push_back(previous_action == Action::Trade ? 1.0 : 0.0);
    out.push_back(previous_action == Action::Idle ? 1.0 : 0.0);
    out.push_back(previous_reward);
    return out;
}

PseudoState build_pseudo_state(std::span<const std::vector<double>> history, int h_max) {
    if (history.empty()) throw ValidationError("pseudo-state needs at least one observation");
    if (h_max < 1) throw ValidationError("window length must be at least 1");
    PseudoState z;
    z.h_max = h_max;
    z.block = static_cast<int>(history.back().size());
    z.values.assign(static_cast<std::size_t>(h_max) * static_cast<std::size_t>(z.block), 0.0);
    const std::size_t take = std::min(history.size(), static_cast<std::size_t>(h_max));
    const std::size_t first = history.size() - take;
    const std::size_t pad = static_cast<std::size_t>(h_max) - take;
    for (std::size_t i = 0; i < take; ++i) {
        const auto& obs = history[first + i];
        if (obs.size() != static_cast<std::size_t>(z.block)) throw ValidationError("observations differ in width");
        std::copy(obs.begin(), obs.end(), z.values.begin() + static_cast<std::ptrdiff_t>((pad + i) * obs.size()));
    }
    return z;
}

PseudoState build_pseudo_state(std::span<const StepObservation> history, int h_max) {
    std::vector<std::vector<double>> flat;
    flat.reserve(history.size());
    for (const auto& o : history) flat.push_back(o.flatten());
    return build_pseudo_state(std::span<const std::vector<double>>(flat), h_max);
}

}  // namespace cid
