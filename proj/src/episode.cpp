#include "cidlab/episode.hpp"

#include <cmath>
#include <sstream>

namespace cid {

namespace {

constexpr double kImbalanceTolerance = 1e-9;

[[noreturn]] void rethrow_with(const std::string& context, const Error& e) {
    const std::string msg = context + ": " + e.what();
    if (dynamic_cast<const SolverError*>(&e)) throw SolverError(msg);
    if (dynamic_cast<const ScheduleError*>(&e)) throw ScheduleError(msg);
    if (dynamic_cast<const ValidationError*>(&e)) throw ValidationError(msg);
    if (dynamic_cast<const HorizonError*>(&e)) throw HorizonError(msg);
    throw Error(msg);
}

std::string step_context(const DayRecord& day, int step) {
    return "day " + day.id + " step " + std::to_string(step);
}

}  // namespace

Policy constant_policy(Action a) {
    return [a](int, const PseudoState&) { return a; };
}

double Trajectory::total() const {
    double sum = 0.0;
    for (double r : rewards) sum += r;
    return sum;
}

PseudoState Trajectory::state(int t, int h_max) const {
    if (t < 0 || t >= static_cast<int>(observations.size())) throw ValidationError("state index out of range");
    return build_pseudo_state(std::span(observations.data(), static_cast<std::size_t>(t) + 1), h_max);
}

Trajectory run_episode(const DayRecord& day, const EpisodeConfig& config, const Policy& policy) {
    const auto& cal = config.calendar;
    const int K = cal.steps();
    if (day.steps() != K) throw ValidationError("day " + day.id + " has " + std::to_string(day.steps()) +
                                                " steps, calendar expects " + std::to_string(K));
    const int n = cal.n_slots();

    OrderBook book(n);
    auto position = MarketPosition::flat(n);
    auto schedule = StorageSchedule::flat(config.storage, n, cal.slot_hours());

    Trajectory tr;
    tr.day = day.id;
    std::vector<StepObservation> history;

    auto observe = [&](int t) {
        const int minute = cal.time_of_step(t);
        book.remove_closed(cal, minute);
        for (const auto& o : day.arrivals[static_cast<std::size_t>(t)]) book.match_insert(o);
        StepObservation obs;
        obs.book = book_features(book);
        obs.contracted = position.contracted;
        obs.exog = day.exog[static_cast<std::size_t>(t)];
        if (t > 0) {
            obs.previous_action = tr.actions.back();
            obs.previous_reward = tr.rewards.back();
        }
        tr.observations.push_back(obs.flatten());
    };

    for (int t = 0; t < K; ++t) {
        try {
            observe(t);
        } catch (const Error& e) {
            rethrow_with(step_context(day, t), e);
        }
        const auto z = tr.state(t, config.history);
        const Action a = policy(t, z);
        double reward = 0.0;
        if (a == Action::Trade) {
            auto problem = TradeProblem::from_state(book, position, schedule, config.storage, cal, t, config.settlement);
            try {
                const auto sol = solve_trade(problem, config.trade);
                const auto acc = book.apply_acceptance(sol.fractions, cal, config.settlement);
                update_after_clear(position, schedule, config.storage, cal, problem.minute(), acc.contracted_mw(),
                                   sol.d_discharge, sol.d_charge);
                reward = acc.cash_eur;
            } catch (const Error& e) {
                rethrow_with(step_context(day, t) + "\n" + dump_problem(problem), e);
            }
            for (std::size_t i = 0; i < position.imbalance.size(); ++i) {
                if (std::abs(position.imbalance[i]) > kImbalanceTolerance) {
                    std::ostringstream os;
                    os.precision(17);
                    os << step_context(day, t) << ": imbalance " << position.imbalance[i] << " in slot " << i
                       << "\n" << dump_problem(problem);
                    throw ScheduleError(os.str());
                }
            }
            const auto issues = validate(schedule, config.storage);
            if (!issues.empty())
                throw ScheduleError(step_context(day, t) + ": " + issues.front() + "\n" + dump_problem(problem));
        }
        tr.actions.push_back(a);
        tr.rewards.push_back(reward);
    }
    try {
        observe(K);
    } catch (const Error& e) {
        rethrow_with(step_context(day, K), e);
    }
    return tr;
}

DailyReturn run_policy(const DayRecord& day, const Policy& policy, const std::string& tag,
                       const EpisodeConfig& config) {
    return {day.id, tag, run_episode(day, config, policy).total()};
}

DailyReturn rolling_intrinsic(const DayRecord& day, const EpisodeConfig& config) {
    return run_policy(day, constant_policy(Action::Trade), "ri", config);
}

}  // namespace cid
