#pragma once

#include "cidlab/calendar.hpp"
#include "cidlab/types.hpp"

#include <map>
#include <optional>
#include <vector>

namespace cid {

struct Order {
    OrderId id = 0;
    int product = 0;
    Side side = Side::Sell;
    Volume volume;
    Price price;
    int arrival_step = 0;

    bool operator==(const Order&) const = default;
};

struct Transaction {
    int product = 0;
    Volume volume;
    Price price;
    OrderId resting_order_id = 0;
    Side aggressor_side = Side::Buy;
};

struct PriceBounds {
    Price min = Price::from_ticks(-3000 * Price::kTicksPerEur);
    Price max = Price::from_ticks(3000 * Price::kTicksPerEur);
};

// Result of accepting resting orders as an aggressor.
struct Acceptance {
    std::vector<Transaction> transactions;
    std::vector<Volume> contracted;  // per slot, positive when the agent sells
    double cash_eur = 0.0;

    std::vector<double> contracted_mw() const;
};

// Quantity traded when fraction `a` of a resting volume is accepted; a = 1
// takes the whole order.
Volume accepted_volume(Volume resting, double fraction);

// Central limit order book for a set of products. Bids are kept in
// descending price order, asks ascending; ties break on lower id (arrival).
class OrderBook {
public:
    explicit OrderBook(int n_products = 0, PriceBounds bounds = {});

    int n_products() const { return static_cast<int>(books_.size()); }
    const PriceBounds& bounds() const { return bounds_; }

    // Matches `order` against the opposite side at resting prices; any
    // residual rests. Throws ValidationError on bad volume, price, product or
    // a non-increasing id.
    std::vector<Transaction> match_insert(const Order& order);

    // Accepts fraction a_j of each listed resting order. Fractions of zero may
    // be omitted.
    Acceptance apply_acceptance(const std::map<OrderId, double>& fractions, const MarketCalendar& calendar,
                                Settlement settlement = Settlement::Energy);

    // Drops every resting order of products whose gate has closed at `minute`.
    void remove_closed(const MarketCalendar& calendar, int minute);

    const std::vector<Order>& bids(int product) const { return books_.at(static_cast<std::size_t>(product)).bids; }
    const std::vector<Order>& asks(int product) const { return books_.at(static_cast<std::size_t>(product)).asks; }
    const std::vector<Order>& side(int product, Side s) const { return s == Side::Buy ? bids(product) : asks(product); }
    std::optional<Price> best_bid(int product) const;
    std::optional<Price> best_ask(int product) const;

    std::vector<Order> resting_orders() const;
    const Order* find(OrderId id) const;
    Volume resting_volume() const;
    std::size_t size() const;
    bool empty() const { return size() == 0; }
    bool crossed() const;
    OrderId last_id() const { return last_id_; }

private:
    struct ProductBook {
        std::vector<Order> bids;
        std::vector<Order> asks;
    };

    void rest(const Order& order);

    std::vector<ProductBook> books_;
    PriceBounds bounds_;
    OrderId last_id_ = 0;
};

struct DepthPoint {
    Price price;
    Volume cumulative;
    bool operator==(const DepthPoint&) const = default;
};

// Sell side ascending in price, Buy side descending; one point per distinct
// price level.
using DepthCurve = std::vector<DepthPoint>;

DepthCurve aggregate_depth(const OrderBook& book, Side side);
DepthCurve product_depth(const OrderBook& book, int product, Side side);

}  // namespace cid
