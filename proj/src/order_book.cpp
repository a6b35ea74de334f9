#include "cidlab/order_book.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cid {

namespace {

bool bid_before(const Order& a, const Order& b) {
    if (a.price != b.price) return a.price > b.price;
    return a.id < b.id;
}

bool ask_before(const Order& a, const Order& b) {
    if (a.price != b.price) return a.price < b.price;
    return a.id < b.id;
}

DepthCurve stack(std::vector<Order> orders, Side side) {
    std::sort(orders.begin(), orders.end(), side == Side::Sell ? ask_before : bid_before);
    DepthCurve curve;
    Volume cum;
    for (const auto& o : orders) {
        cum += o.volume;
        if (!curve.empty() && curve.back().price == o.price)
            curve.back().cumulative = cum;
        else
            curve.push_back({o.price, cum});
    }
    return curve;
}

}  // namespace

std::vector<double> Acceptance::contracted_mw() const {
    std::vector<double> out;
    out.reserve(contracted.size());
    for (auto v : contracted) out.push_back(v.mw());
    return out;
}

OrderBook::OrderBook(int n_products, PriceBounds bounds)
    : books_(static_cast<std::size_t>(std::max(n_products, 0))), bounds_(bounds) {}

std::vector<Transaction> OrderBook::match_insert(const Order& order) {
    if (order.volume <= Volume{}) throw ValidationError("order " + std::to_string(order.id) + ": volume must be positive");
    if (order.price < bounds_.min || order.price > bounds_.max)
        throw ValidationError("order " + std::to_string(order.id) + ": price outside bounds");
    if (order.product < 0 || order.product >= n_products())
        throw ValidationError("order " + std::to_string(order.id) + ": unknown product " + std::to_string(order.product));
    if (order.id <= last_id_)
        throw ValidationError("order " + std::to_string(order.id) + ": ids must increase with arrival");
    last_id_ = order.id;

    auto& pb = books_[static_cast<std::size_t>(order.product)];
    auto& opposite = order.side == Side::Buy ? pb.asks : pb.bids;
    const auto crosses = [&](const Order& resting) {
        return order.side == Side::Buy ? order.price >= resting.price : order.price <= resting.price;
    };

    std::vector<Transaction> fills;
    Volume remaining = order.volume;
    std::size_t consumed = 0;
    while (remaining > Volume{} && consumed < opposite.size() && crosses(opposite[consumed])) {
        auto& resting = opposite[consumed];
        const Volume qty = std::min(remaining, resting.volume);
        fills.push_back({order.product, qty, resting.price, resting.id, order.side});
        remaining -= qty;
        resting.volume -= qty;
        if (resting.volume == Volume{}) ++consumed;
    }
    opposite.erase(opposite.begin(), opposite.begin() + static_cast<std::ptrdiff_t>(consumed));

    if (remaining > Volume{}) {
        Order residual = order;
        residual.volume = remaining;
        rest(residual);
    }
    return fills;
}

void OrderBook::rest(const Order& order) {
    auto& pb = books_[static_cast<std::size_t>(order.product)];
    if (order.side == Side::Buy)
        pb.bids.insert(std::upper_bound(pb.bids.begin(), pb.bids.end(), order, bid_before), order);
    else
        pb.asks.insert(std::upper_bound(pb.asks.begin(), pb.asks.end(), order, ask_before), order);
}

Volume accepted_volume(Volume resting, double fraction) {
    if (fraction >= 1.0) return resting;
    if (!(fraction > 0.0)) return Volume{};
    const Volume qty = Volume::from_units(std::llround(fraction * static_cast<double>(resting.units())));
    return std::clamp(qty, Volume{}, resting);
}

Acceptance OrderBook::apply_acceptance(const std::map<OrderId, double>& fractions, const MarketCalendar& calendar,
                                       Settlement settlement) {
    for (const auto& [id, a] : fractions) {
        if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("fraction for order " + std::to_string(id) + " outside [0,1]");
        if (find(id) == nullptr) throw ValidationError("order " + std::to_string(id) + " is not in the book");
    }

    Acceptance out;
    out.contracted.assign(static_cast<std::size_t>(calendar.n_slots()), Volume{});
    for (std::size_t p = 0; p < books_.size(); ++p) {
        const double hours = settlement == Settlement::Energy ? calendar.product(static_cast<int>(p)).duration_h : 1.0;
        for (auto* side : {&books_[p].bids, &books_[p].asks}) {
            for (auto& o : *side) {
                auto it = fractions.find(o.id);
                if (it == fractions.end() || it->second == 0.0) continue;
                const Volume qty = accepted_volume(o.volume, it->second);
                if (qty == Volume{}) continue;
                out.transactions.push_back({o.product, qty, o.price, o.id, opposite(o.side)});
                // The agent sells into resting bids and buys from resting asks.
                const Volume signed_qty = o.side == Side::Buy ? qty : -qty;
                out.contracted[p] += signed_qty;
                out.cash_eur += signed_qty.mw() * o.price.eur() * hours;
                o.volume -= qty;
            }
            side->erase(std::remove_if(side->begin(), side->end(), [](const Order& o) { return o.volume == Volume{}; }),
                        side->end());
        }
    }
    return out;
}

void OrderBook::remove_closed(const MarketCalendar& calendar, int minute) {
    for (std::size_t p = 0; p < books_.size(); ++p) {
        if (!calendar.is_open(static_cast<int>(p), minute)) {
            books_[p].bids.clear();
            books_[p].asks.clear();
        }
    }
}

std::optional<Price> OrderBook::best_bid(int product) const {
    const auto& b = bids(product);
    if (b.empty()) return std::nullopt;
    return b.front().price;
}

std::optional<Price> OrderBook::best_ask(int product) const {
    const auto& a = asks(product);
    if (a.empty()) return std::nullopt;
    return a.front().price;
}

std::vector<Order> OrderBook::resting_orders() const {
    std::vector<Order> out;
    for (const auto& pb : books_) {
        out.insert(out.end(), pb.asks.begin(), pb.asks.end());
        out.insert(out.end(), pb.bids.begin(), pb.bids.end());
    }
    return out;
}

const Order* OrderBook::find(OrderId id) const {
    for (const auto& pb : books_) {
        for (const auto* side : {&pb.bids, &pb.asks})
            for (const auto& o : *side)
                if (o.id == id) return &o;
    }
    return nullptr;
}

Volume OrderBook::resting_volume() const {
    Volume total;
    for (const auto& pb : books_) {
        for (const auto& o : pb.bids) total += o.volume;
        for (const auto& o : pb.asks) total += o.volume;
    }
    return total;
}

std::size_t OrderBook::size() const {
    std::size_t n = 0;
    for (const auto& pb : books_) n += pb.bids.size() + pb.asks.size();
    return n;
}

bool OrderBook::crossed() const {
    for (std::size_t p = 0; p < books_.size(); ++p) {
        const auto bid = best_bid(static_cast<int>(p));
        const auto ask = best_ask(static_cast<int>(p));
        if (bid && ask && *bid >= *ask) return true;
    }
    return false;
}

DepthCurve aggregate_depth(const OrderBook& book, Side side) {
    std::vector<Order> all;
    for (int p = 0; p < book.n_products(); ++p) {
        const auto& s = book.side(p, side);
        all.insert(all.end(), s.begin(), s.end());
    }
    return stack(std::move(all), side);
}

DepthCurve product_depth(const OrderBook& book, int product, Side side) {
    return stack(book.side(product, side), side);
}

}  // namespace cid
