#pragma once

#include "cidlab/order_book.hpp"

namespace cid::testing {

inline Order make_order(OrderId id, int product, Side side, double volume_mw, double price_eur, int step = 0) {
    return Order{id, product, side, Volume::grain_from_mw(volume_mw), Price::from_eur(price_eur), step};
}

// Resting orders for Q1, 00:00-00:15, inserted in id (arrival) order.
inline OrderBook q1_book(int n_products = 1) {
    OrderBook book(n_products);
    book.match_insert(make_order(1, 0, Side::Buy, 3.15, 33.8));
    book.match_insert(make_order(2, 0, Side::Sell, 2.35, 34.5));
    book.match_insert(make_order(3, 0, Side::Buy, 1.125, 29.3));
    book.match_insert(make_order(4, 0, Side::Sell, 6.25, 36.3));
    book.match_insert(make_order(5, 0, Side::Buy, 2.5, 15.9));
    return book;
}

}  // namespace cid::testing
