#pragma once

#include "cidlab/order_book.hpp"
#include "cidlab/types.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace cid {

// Distances between the aggregated Buy and Sell depth curves.
// d[0..4]: price differences (EUR/MWh), d[5..9]: |volume| differences (MW).
struct BookFeatures {
    std::array<double, 10> d{};
    bool empty_buy = true;
    bool empty_sell = true;
};

// Summary of one aggregated depth curve. Percentile q is the first curve
// point whose cumulative volume reaches q of the total.
struct CurveSummary {
    double p_first = 0.0;  // best price (max for Buy, min for Sell)
    double p_mean = 0.0;   // volume weighted
    double p25 = 0.0, p50 = 0.0, p75 = 0.0;
    double v_first = 0.0;  // cumulative volume at the best price, MW
    double v_mean = 0.0;   // mean of the cumulative points
    double v25 = 0.0, v50 = 0.0, v75 = 0.0;
};

CurveSummary summarize(const DepthCurve& curve);
BookFeatures book_features(const OrderBook& book);

struct ExogRecord {
    std::array<double, 24> day_ahead{};         // EUR/MWh
    std::array<double, 4> imbalance_price{};    // last four quarters, EUR/MWh
    std::array<double, 4> system_imbalance{};   // MW
    int hour = 0;
    int month = 1;
    bool weekend = false;

    bool operator==(const ExogRecord&) const = default;
};

// Per-step observation s'_t.
struct StepObservation {
    BookFeatures book;
    std::vector<double> contracted;  // P_mar per slot
    ExogRecord exog;
    std::optional<Action> previous_action;
    double previous_reward = 0.0;

    static int width(int n_slots) { return 10 + 2 + n_slots + 24 + 4 + 4 + 3 + 2 + 1; }
    // Fixed layout: D1..D10, empty flags, P_mar, exogenous, action one-hot,
    // previous reward.
    std::vector<double> flatten() const;
};

// Last min(len, h_max) flattened observations, oldest first, front-padded
// with zero blocks to exactly h_max blocks.
struct PseudoState {
    int h_max = 0;
    int block = 0;
    std::vector<double> values;
};

PseudoState build_pseudo_state(std::span<const std::vector<double>> history, int h_max);
PseudoState build_pseudo_state(std::span<const StepObservation> history, int h_max);

}  // namespace cid
