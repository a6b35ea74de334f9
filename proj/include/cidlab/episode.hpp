#pragma once

#include "cidlab/calendar.hpp"
#include "cidlab/day.hpp"
#include "cidlab/features.hpp"
#include "cidlab/storage.hpp"
#include "cidlab/trade.hpp"
#include "cidlab/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace cid {

struct EpisodeConfig {
    MarketCalendar calendar = MarketCalendar::desk_case();
    StorageParams storage = StorageParams::desk_case();
    Settlement settlement = Settlement::Energy;
    int history = 4;  // h_max, blocks in the pseudo-state
    TradeOptions trade;
};

// Chooses the high-level action at decision step t.
using Policy = std::function<Action(int step, const PseudoState& state)>;

Policy constant_policy(Action a);

// One simulated day: K + 1 flattened observations, K actions and rewards.
struct Trajectory {
    std::string day;
    int actor = 0;
    long index = 0;  // episode number within the producing actor
    std::vector<std::vector<double>> observations;
    std::vector<Action> actions;
    std::vector<double> rewards;

    int steps() const { return static_cast<int>(actions.size()); }
    double total() const;
    // Pseudo-state at step t from observations 0..t.
    PseudoState state(int t, int h_max) const;
    bool operator==(const Trajectory&) const = default;
};

// Replays `day` and queries `policy` at every step. Trade solves the
// acceptance problem, clears it against the book and updates the schedule.
// Throws (with day and step in the message) when the position leaves a
// non-zero imbalance or the schedule breaks a limit.
Trajectory run_episode(const DayRecord& day, const EpisodeConfig& config, const Policy& policy);

struct DailyReturn {
    std::string day;
    std::string policy;
    double value = 0.0;  // EUR, sum of the step rewards
};

DailyReturn run_policy(const DayRecord& day, const Policy& policy, const std::string& tag,
                       const EpisodeConfig& config);
// Constant-Trade benchmark.
DailyReturn rolling_intrinsic(const DayRecord& day, const EpisodeConfig& config);

}  // namespace cid
