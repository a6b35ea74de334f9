#pragma once

#include "cidlab/calendar.hpp"

#include <string>
#include <vector>

namespace cid {

// Storage device limits. Energies in MWh, powers in MW. A non-zero power
// minimum applies only while the device is in that mode.
struct StorageParams {
    double soc_min = 0.0;
    double soc_max = 200.0;
    double c_min = 0.0;
    double c_max = 200.0;
    double g_min = 0.0;
    double g_max = 200.0;
    double eta = 1.0;
    double soc_init = 100.0;
    double soc_term = 100.0;

    // The pumped-hydro unit of the case study.
    static StorageParams full_case() { return {}; }
    // Small battery sized for the desk calendar.
    static StorageParams desk_case() {
        StorageParams p;
        p.soc_max = 20.0;
        p.c_max = p.g_max = 10.0;
        p.soc_init = p.soc_term = 10.0;
        return p;
    }
    // Throws ValidationError when limits are inconsistent.
    void check() const;
};

// Delivery plan. `soc` holds n_slots + 1 boundary values: soc[0] at tau_init,
// soc[n] at tau_term.
struct StorageSchedule {
    std::vector<double> discharge;  // G
    std::vector<double> charge;     // C
    std::vector<double> soc;
    double slot_hours = 0.25;

    static StorageSchedule flat(const StorageParams& params, int n_slots, double slot_hours);
    int n_slots() const { return static_cast<int>(charge.size()); }
    void recompute_soc(const StorageParams& params);
};

struct MarketPosition {
    std::vector<double> contracted;  // P_mar, positive = net sell
    std::vector<double> imbalance;   // Delta

    static MarketPosition flat(int n_slots);
};

struct Adjustments {
    std::vector<double> discharge;  // dG
    std::vector<double> charge;     // dC
    double residual_imbalance = 0.0;
};

// SoC boundary values implied by a G/C plan, from soc_init forward.
std::vector<double> soc_path(const StorageParams& params, const std::vector<double>& discharge,
                             const std::vector<double>& charge, double slot_hours);

// Applies a clearing at decision time `minute`: P_mar += v_con, G += dG,
// C += dC, Delta += dG - dC - v_con, then SoC from soc_init forward. Throws
// ScheduleError naming the offending slots when power limits break or a
// delivered slot would change.
void update_after_clear(MarketPosition& position, StorageSchedule& schedule, const StorageParams& params,
                        const MarketCalendar& calendar, int minute, const std::vector<double>& contracted,
                        const std::vector<double>& d_discharge, const std::vector<double>& d_charge);

// The "default" storage strategy: per adjustable slot, move G - C as close as
// the power limits allow to the post-fill contracted position.
Adjustments default_adjustments(const MarketPosition& position_after_fill, const StorageSchedule& schedule,
                                const StorageParams& params, const MarketCalendar& calendar, int minute);

// Empty when the schedule satisfies every limit within 1e-9.
std::vector<std::string> validate(const StorageSchedule& schedule, const StorageParams& params);

inline constexpr double kScheduleTolerance = 1e-9;

}  // namespace cid
