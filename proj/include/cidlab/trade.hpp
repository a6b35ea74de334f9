#pragma once

#include "cidlab/calendar.hpp"
#include "cidlab/lp.hpp"
#include "cidlab/order_book.hpp"
#include "cidlab/storage.hpp"
#include "cidlab/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace cid {

// Bid-acceptance problem at one decision step.
struct TradeProblem {
    int step = 0;
    std::vector<Order> orders;  // resting orders of open products
    MarketPosition position;
    StorageSchedule schedule;
    StorageParams params;
    MarketCalendar calendar;
    Settlement settlement = Settlement::Energy;

    int minute() const { return calendar.time_of_step(step); }

    static TradeProblem from_state(const OrderBook& book, const MarketPosition& position,
                                   const StorageSchedule& schedule, const StorageParams& params,
                                   const MarketCalendar& calendar, int step,
                                   Settlement settlement = Settlement::Energy);
};

struct TradeSolution {
    std::map<OrderId, double> fractions;  // one entry per order of the problem
    std::vector<int> mode;                // 1 = charging, 0 = otherwise
    StorageSchedule schedule;             // G', C', SoC'
    std::vector<double> d_discharge;
    std::vector<double> d_charge;
    std::vector<double> contracted;       // v_con per slot, MW
    double reward = 0.0;                  // EUR
    int nodes = 0;
    bool branched = false;
};

struct TradeOptions {
    // Run branch-and-bound even when the relaxation is known to be exact.
    bool force_branching = false;
    double integrality_tolerance = 1e-6;
    int max_nodes = 200000;
    lp::Options lp;
};

// +v when the resting order is a Buy (the agent sells), -v for a Sell.
double sign_volume(double v, Side y);

// Globally optimal acceptance fractions and the matching storage schedule.
// Throws ValidationError on malformed input or an infeasible prior schedule,
// SolverError (with a problem dump in the message) on internal failure.
TradeSolution solve_trade(const TradeProblem& problem, const TradeOptions& options = {});

// No transactions; schedule and position unchanged.
TradeSolution idle(const StorageSchedule& schedule, const MarketPosition& position);

// Line-based text form: header lines, then one line per slot and per order.
std::string dump_problem(const TradeProblem& problem);
TradeProblem parse_problem(const std::string& text);

}  // namespace cid
