#include "cidlab/storage.hpp"

#include "cidlab/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cid {

void StorageParams::check() const {
    if (!(soc_min <= soc_max)) throw ValidationError("soc_min > soc_max");
    if (soc_init < soc_min || soc_init > soc_max) throw ValidationError("soc_init outside [soc_min, soc_max]");
    if (soc_term < soc_min || soc_term > soc_max) throw ValidationError("soc_term outside [soc_min, soc_max]");
    if (!(0.0 <= c_min && c_min <= c_max)) throw ValidationError("charge limits must satisfy 0 <= c_min <= c_max");
    if (!(0.0 <= g_min && g_min <= g_max)) throw ValidationError("discharge limits must satisfy 0 <= g_min <= g_max");
    if (!(eta > 0.0 && eta <= 1.0)) throw ValidationError("efficiency must lie in (0, 1]");
}

StorageSchedule StorageSchedule::flat(const StorageParams& params, int n_slots, double slot_hours) {
    StorageSchedule s;
    s.discharge.assign(static_cast<std::size_t>(n_slots), 0.0);
    s.charge.assign(static_cast<std::size_t>(n_slots), 0.0);
    s.slot_hours = slot_hours;
    s.recompute_soc(params);
    return s;
}

void StorageSchedule::recompute_soc(const StorageParams& params) {
    soc = soc_path(params, discharge, charge, slot_hours);
}

MarketPosition MarketPosition::flat(int n_slots) {
    MarketPosition p;
    p.contracted.assign(static_cast<std::size_t>(n_slots), 0.0);
    p.imbalance.assign(static_cast<std::size_t>(n_slots), 0.0);
    return p;
}

std::vector<double> soc_path(const StorageParams& params, const std::vector<double>& discharge,
                             const std::vector<double>& charge, double slot_hours) {
    std::vector<double> soc(charge.size() + 1);
    soc[0] = params.soc_init;
    for (std::size_t i = 0; i < charge.size(); ++i)
        soc[i + 1] = soc[i] + slot_hours * (params.eta * charge[i] - discharge[i] / params.eta);
    return soc;
}

void update_after_clear(MarketPosition& position, StorageSchedule& schedule, const StorageParams& params,
                        const MarketCalendar& calendar, int minute, const std::vector<double>& contracted,
                        const std::vector<double>& d_discharge, const std::vector<double>& d_charge) {
    const auto n = static_cast<std::size_t>(schedule.n_slots());
    if (contracted.size() != n || d_discharge.size() != n || d_charge.size() != n)
        throw ScheduleError("adjustment vectors must cover every delivery slot");

    std::vector<int> frozen;
    std::vector<int> out_of_bounds;
    std::vector<double> g(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool moved = contracted[i] != 0.0 || d_discharge[i] != 0.0 || d_charge[i] != 0.0;
        if (moved && !calendar.is_adjustable(static_cast<int>(i), minute)) frozen.push_back(static_cast<int>(i));
        g[i] = schedule.discharge[i] + d_discharge[i];
        c[i] = schedule.charge[i] + d_charge[i];
        if (std::abs(g[i]) <= kScheduleTolerance) g[i] = 0.0;
        if (std::abs(c[i]) <= kScheduleTolerance) c[i] = 0.0;
        const bool g_ok = g[i] == 0.0 || (g[i] >= params.g_min - kScheduleTolerance && g[i] <= params.g_max + kScheduleTolerance);
        const bool c_ok = c[i] == 0.0 || (c[i] >= params.c_min - kScheduleTolerance && c[i] <= params.c_max + kScheduleTolerance);
        if (!g_ok || !c_ok || g[i] < 0.0 || c[i] < 0.0 || (g[i] > 0.0 && c[i] > 0.0))
            out_of_bounds.push_back(static_cast<int>(i));
    }
    const auto list = [](const std::vector<int>& slots) {
        std::ostringstream os;
        for (std::size_t k = 0; k < slots.size(); ++k) os << (k ? "," : "") << slots[k];
        return os.str();
    };
    if (!frozen.empty()) throw ScheduleError("adjustment on delivered slots: " + list(frozen));
    if (!out_of_bounds.empty()) throw ScheduleError("power limits violated in slots: " + list(out_of_bounds));

    for (std::size_t i = 0; i < n; ++i) {
        position.contracted[i] += contracted[i];
        position.imbalance[i] += d_discharge[i] - d_charge[i] - contracted[i];
    }
    schedule.discharge = std::move(g);
    schedule.charge = std::move(c);
    schedule.recompute_soc(params);
}

Adjustments default_adjustments(const MarketPosition& position_after_fill, const StorageSchedule& schedule,
                                const StorageParams& params, const MarketCalendar& calendar, int minute) {
    const auto n = static_cast<std::size_t>(schedule.n_slots());
    Adjustments adj;
    adj.discharge.assign(n, 0.0);
    adj.charge.assign(n, 0.0);
    const auto project = [](double want, double lo, double hi) {
        if (want <= 0.0) return 0.0;
        if (want < lo) return want < lo / 2.0 ? 0.0 : lo;
        return std::min(want, hi);
    };
    for (std::size_t i = 0; i < n; ++i) {
        const double target = position_after_fill.contracted[i];
        double g = schedule.discharge[i];
        double c = schedule.charge[i];
        if (calendar.is_adjustable(static_cast<int>(i), minute)) {
            g = project(target, params.g_min, params.g_max);
            c = project(-target, params.c_min, params.c_max);
            adj.discharge[i] = g - schedule.discharge[i];
            adj.charge[i] = c - schedule.charge[i];
        }
        adj.residual_imbalance += std::abs(g - c - target);
    }
    return adj;
}

std::vector<std::string> validate(const StorageSchedule& schedule, const StorageParams& params) {
    std::vector<std::string> out;
    const double tol = kScheduleTolerance;
    const auto n = static_cast<std::size_t>(schedule.n_slots());
    const auto at = [](const char* what, std::size_t i, double v) {
        std::ostringstream os;
        os << what << " at slot " << i << " (" << v << ")";
        return os.str();
    };
    if (schedule.discharge.size() != n || schedule.soc.size() != n + 1) {
        out.push_back("schedule vectors have inconsistent lengths");
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double g = schedule.discharge[i];
        const double c = schedule.charge[i];
        if (g < -tol || g > params.g_max + tol || (g > tol && g < params.g_min - tol))
            out.push_back(at("discharge outside limits", i, g));
        if (c < -tol || c > params.c_max + tol || (c > tol && c < params.c_min - tol))
            out.push_back(at("charge outside limits", i, c));
        if (g > tol && c > tol) out.push_back(at("simultaneous charge and discharge", i, g * c));
        const double expected = schedule.soc[i] + schedule.slot_hours * (params.eta * c - g / params.eta);
        if (std::abs(schedule.soc[i + 1] - expected) > tol) out.push_back(at("state of charge recursion broken", i + 1, schedule.soc[i + 1]));
    }
    for (std::size_t i = 0; i <= n; ++i) {
        const double s = schedule.soc[i];
        if (s < params.soc_min - tol || s > params.soc_max + tol) out.push_back(at("state of charge outside limits", i, s));
    }
    if (std::abs(schedule.soc.front() - params.soc_init) > tol) out.push_back(at("initial state of charge mismatch", 0, schedule.soc.front()));
    if (std::abs(schedule.soc.back() - params.soc_term) > tol) out.push_back(at("terminal state of charge mismatch", n, schedule.soc.back()));
    return out;
}

}  // namespace cid
