#include "cidlab/trade.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <queue>
#include <sstream>

namespace cid {

namespace {

enum class Mode : std::int8_t { Free, Charge, Discharge, Off };

// Largest volume change, in MW, allowed when rounding a fraction to 0 or 1.
constexpr double kSnapMW = 1e-11;

std::string fmt_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw ValidationError("bad number in problem dump: " + s);
    return v;
}

// LP model for one set of slot modes. Slots that carry no open order, or
// whose delivery has started, are constants.
class Model {
public:
    Model(const TradeProblem& p, double hours_factor) : p_(p) {
        const int n = p.schedule.n_slots();
        const int minute = p.minute();
        has_orders_.assign(static_cast<std::size_t>(n), false);
        for (const auto& o : p.orders) has_orders_[static_cast<std::size_t>(o.product)] = true;
        for (int s = 0; s < n; ++s)
            if (has_orders_[static_cast<std::size_t>(s)] && p.calendar.is_adjustable(s, minute)) slots_.push_back(s);
        for (const auto& o : p.orders) {
            const double hours = hours_factor > 0 ? hours_factor : p.calendar.product(o.product).duration_h;
            const double u = sign_volume(o.volume.mw(), o.side);
            gain_.push_back(u * o.price.eur() * hours);
            signed_mw_.push_back(u);
        }
    }

    const std::vector<int>& slots() const { return slots_; }
    const std::vector<double>& gain() const { return gain_; }

    struct Built {
        lp::Problem lp;
        std::vector<int> c, g, k;  // per entry of slots(); k = -1 when absent
    };

    // `modes` is indexed like slots(). Free slots get a relaxed k in [0,1]
    // unless `with_k` is false.
    Built build(const std::vector<Mode>& modes, bool with_k) const {
        const auto& sp = p_.params;
        const auto& sched = p_.schedule;
        Built b;
        b.lp.set_maximize(true);
        for (double gain : gain_) b.lp.add_variable(0.0, 1.0, gain);
        const int n = sched.n_slots();
        std::vector<int> pos(static_cast<std::size_t>(n), -1);
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            pos[static_cast<std::size_t>(slots_[i])] = static_cast<int>(i);
            double clo = 0.0, chi = sp.c_max, glo = 0.0, ghi = sp.g_max;
            switch (modes[i]) {
                case Mode::Free: break;
                case Mode::Charge: clo = sp.c_min; glo = ghi = 0.0; break;
                case Mode::Discharge: glo = sp.g_min; clo = chi = 0.0; break;
                case Mode::Off: clo = chi = glo = ghi = 0.0; break;
            }
            b.c.push_back(b.lp.add_variable(clo, chi, 0.0));
            b.g.push_back(b.lp.add_variable(glo, ghi, 0.0));
            b.k.push_back(modes[i] == Mode::Free && with_k ? b.lp.add_variable(0.0, 1.0, 0.0) : -1);
        }
        // G - C - sum(u v a) = P_mar
        std::vector<std::vector<std::pair<int, double>>> balance(slots_.size());
        for (std::size_t j = 0; j < p_.orders.size(); ++j) {
            const int at = pos[static_cast<std::size_t>(p_.orders[j].product)];
            balance[static_cast<std::size_t>(at)].emplace_back(static_cast<int>(j), -signed_mw_[j]);
        }
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            auto row = balance[i];
            row.emplace_back(b.g[i], 1.0);
            row.emplace_back(b.c[i], -1.0);
            const double pm = p_.position.contracted[static_cast<std::size_t>(slots_[i])];
            b.lp.add_row(std::move(row), pm, pm);
            if (b.k[i] >= 0) {
                b.lp.add_row({{b.c[i], 1.0}, {b.k[i], -sp.c_max}}, -lp::kInf, 0.0);
                b.lp.add_row({{b.g[i], 1.0}, {b.k[i], sp.g_max}}, -lp::kInf, sp.g_max);
            }
        }
        // Cumulative state of charge, divided by the slot length.
        if (!slots_.empty()) {
            const double h = sched.slot_hours;
            double fixed = 0.0;
            std::vector<std::pair<int, double>> acc;
            for (int s = 0; s < n; ++s) {
                const int at = pos[static_cast<std::size_t>(s)];
                if (at < 0) {
                    fixed += sp.eta * sched.charge[static_cast<std::size_t>(s)] - sched.discharge[static_cast<std::size_t>(s)] / sp.eta;
                } else {
                    acc.emplace_back(b.c[static_cast<std::size_t>(at)], sp.eta);
                    acc.emplace_back(b.g[static_cast<std::size_t>(at)], -1.0 / sp.eta);
                }
                if (acc.empty()) continue;
                if (s + 1 == n) {
                    const double rhs = (sp.soc_term - sp.soc_init) / h - fixed;
                    b.lp.add_row(acc, rhs, rhs);
                } else {
                    b.lp.add_row(acc, (sp.soc_min - sp.soc_init) / h - fixed, (sp.soc_max - sp.soc_init) / h - fixed);
                }
            }
        }
        return b;
    }

private:
    const TradeProblem& p_;
    std::vector<bool> has_orders_;
    std::vector<int> slots_;
    std::vector<double> gain_;
    std::vector<double> signed_mw_;
};

struct Node {
    double bound;
    long seq;
    std::vector<Mode> modes;
    bool operator<(const Node& o) const { return bound != o.bound ? bound < o.bound : seq > o.seq; }
};

[[noreturn]] void solver_failure(const std::string& what, const TradeProblem& p) {
    throw SolverError(what + "\n" + dump_problem(p));
}

void check_input(const TradeProblem& p) {
    const int n = p.calendar.n_slots();
    const auto un = static_cast<std::size_t>(n);
    if (p.schedule.charge.size() != un || p.schedule.discharge.size() != un || p.schedule.soc.size() != un + 1 ||
        p.position.contracted.size() != un || p.position.imbalance.size() != un)
        throw ValidationError("schedule and position must cover every delivery slot");
    if (p.step < 0 || p.step > p.calendar.steps()) throw HorizonError("trading step outside the horizon");
    p.params.check();
    const int minute = p.minute();
    for (const auto& o : p.orders) {
        if (o.product < 0 || o.product >= n) throw ValidationError("order " + std::to_string(o.id) + " has no such product");
        if (!p.calendar.is_open(o.product, minute))
            throw ValidationError("order " + std::to_string(o.id) + " belongs to a closed product");
        if (!p.calendar.is_adjustable(o.product, minute))
            throw ValidationError("order " + std::to_string(o.id) + " targets a slot already in delivery");
        if (o.volume.units() <= 0) throw ValidationError("order " + std::to_string(o.id) + " has non-positive volume");
    }
    const auto issues = validate(p.schedule, p.params);
    if (!issues.empty()) throw ValidationError("prior schedule infeasible: " + issues.front());
}

}  // namespace

double sign_volume(double v, Side y) {
    if (v < 0.0) throw ValidationError("volume must be non-negative");
    return y == Side::Buy ? v : -v;
}

TradeProblem TradeProblem::from_state(const OrderBook& book, const MarketPosition& position,
                                      const StorageSchedule& schedule, const StorageParams& params,
                                      const MarketCalendar& calendar, int step, Settlement settlement) {
    TradeProblem p;
    p.step = step;
    const int minute = calendar.time_of_step(step);
    for (auto& o : book.resting_orders())
        if (calendar.is_open(o.product, minute)) p.orders.push_back(o);
    std::sort(p.orders.begin(), p.orders.end(), [](const Order& a, const Order& b) { return a.id < b.id; });
    p.position = position;
    p.schedule = schedule;
    p.params = params;
    p.calendar = calendar;
    p.settlement = settlement;
    return p;
}

TradeSolution idle(const StorageSchedule& schedule, const MarketPosition& position) {
    TradeSolution s;
    s.schedule = schedule;
    const auto n = static_cast<std::size_t>(schedule.n_slots());
    s.mode.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.mode[i] = schedule.charge[i] > 0.0 ? 1 : 0;
    s.d_discharge.assign(n, 0.0);
    s.d_charge.assign(n, 0.0);
    s.contracted.assign(n, 0.0);
    (void)position;
    return s;
}

TradeSolution solve_trade(const TradeProblem& problem, const TradeOptions& options) {
    check_input(problem);
    const auto& sp = problem.params;
    const double hours_factor = problem.settlement == Settlement::Power ? 1.0 : 0.0;
    const Model model(problem, hours_factor);
    const auto& slots = model.slots();
    const std::size_t m = slots.size();

    TradeSolution out = idle(problem.schedule, problem.position);
    for (const auto& o : problem.orders) out.fractions[o.id] = 0.0;
    if (m == 0) return out;

    const bool minimums = sp.c_min > 0.0 || sp.g_min > 0.0;
    const bool relaxation_exact = sp.eta == 1.0 && !minimums;
    const double itol = options.integrality_tolerance;

    std::vector<Mode> best_modes;
    lp::Result best;
    bool have_best = false;
    bool relaxed_leaf = false;

    if (relaxation_exact && !options.force_branching) {
        auto built = model.build(std::vector<Mode>(m, Mode::Free), false);
        auto r = lp::solve(built.lp, options.lp);
        if (r.status == lp::Status::Infeasible) {
            for (std::size_t i = 0; i < m; ++i)
                if (std::abs(problem.position.imbalance[static_cast<std::size_t>(slots[i])]) > kScheduleTolerance)
                    throw ValidationError("prior position carries an imbalance in slot " + std::to_string(slots[i]));
            solver_failure("relaxation infeasible on a feasible problem", problem);
        }
        if (r.status != lp::Status::Optimal) solver_failure(std::string("LP ") + lp::to_string(r.status), problem);
        best = std::move(r);
        best_modes.assign(m, Mode::Free);
        have_best = true;
        relaxed_leaf = true;
        out.nodes = 1;
    } else {
        out.branched = true;
        std::priority_queue<Node> open;
        long seq = 0;
        double incumbent = -lp::kInf;
        const auto prune_level = [&] { return incumbent + 1e-9 + 1e-12 * std::abs(incumbent); };
        open.push({lp::kInf, seq++, std::vector<Mode>(m, Mode::Free)});
        bool root = true;
        while (!open.empty()) {
            Node node = open.top();
            open.pop();
            if (have_best && node.bound <= prune_level()) break;
            if (++out.nodes > options.max_nodes) solver_failure("branch-and-bound node limit reached", problem);
            auto built = model.build(node.modes, true);
            auto r = lp::solve(built.lp, options.lp);
            if (r.status == lp::Status::Infeasible) {
                if (root) {
                    for (std::size_t i = 0; i < m; ++i)
                        if (std::abs(problem.position.imbalance[static_cast<std::size_t>(slots[i])]) > kScheduleTolerance)
                            throw ValidationError("prior position carries an imbalance in slot " + std::to_string(slots[i]));
                    solver_failure("root relaxation infeasible on a feasible problem", problem);
                }
                continue;
            }
            root = false;
            if (r.status != lp::Status::Optimal) solver_failure(std::string("LP ") + lp::to_string(r.status), problem);
            if (have_best && r.objective <= prune_level()) continue;

            // Most violated free slot.
            int branch = -1;
            double worst = itol;
            std::vector<Mode> leaf = node.modes;
            for (std::size_t i = 0; i < m; ++i) {
                if (node.modes[i] != Mode::Free) continue;
                const double c = r.x[static_cast<std::size_t>(built.c[i])];
                const double g = r.x[static_cast<std::size_t>(built.g[i])];
                double viol = std::min(c, g);
                if (c > itol && c < sp.c_min - itol) viol = std::max(viol, sp.c_min - c);
                if (g > itol && g < sp.g_min - itol) viol = std::max(viol, sp.g_min - g);
                if (viol > worst) {
                    worst = viol;
                    branch = static_cast<int>(i);
                }
                Mode pick = c >= g ? Mode::Charge : Mode::Discharge;
                const double lo = pick == Mode::Charge ? sp.c_min : sp.g_min;
                if (lo > 0.0 && std::max(c, g) < lo - itol) pick = Mode::Off;
                leaf[i] = pick;
            }
            if (branch < 0) {
                // Integral within tolerance: resolve with the modes pinned.
                auto fixed = model.build(leaf, false);
                auto rf = lp::solve(fixed.lp, options.lp);
                if (rf.status == lp::Status::Optimal) {
                    if (!have_best || rf.objective > incumbent) {
                        incumbent = rf.objective;
                        best = std::move(rf);
                        best_modes = leaf;
                        have_best = true;
                    }
                    continue;
                }
                double largest = -1.0;
                for (std::size_t i = 0; i < m; ++i) {
                    if (node.modes[i] != Mode::Free) continue;
                    const double v = std::min(r.x[static_cast<std::size_t>(built.c[i])], r.x[static_cast<std::size_t>(built.g[i])]);
                    if (v > largest) {
                        largest = v;
                        branch = static_cast<int>(i);
                    }
                }
                if (branch < 0) solver_failure("pinned-mode LP failed at a fully branched node", problem);
            }
            std::vector<Mode> children{Mode::Charge, Mode::Discharge};
            if (minimums) children.push_back(Mode::Off);
            for (Mode child : children) {
                Node next{r.objective, seq++, node.modes};
                next.modes[static_cast<std::size_t>(branch)] = child;
                open.push(std::move(next));
            }
        }
        if (!have_best) solver_failure("no integral solution found", problem);
    }

    // Among optimal acceptances prefer the least total accepted volume.
    {
        const auto tb = model.build(best_modes, false);
        std::vector<double> volume;
        for (const auto& o : problem.orders) volume.push_back(o.volume.mw());
        auto r = lp::solve_lexicographic(tb.lp, volume, options.lp);
        if (r.status == lp::Status::Optimal && r.objective >= best.objective - 1e-9) best.x = std::move(r.x);
    }

    // Quantize acceptances the way the book does and rebuild G', C' from the
    // resulting net position.
    const auto n = static_cast<std::size_t>(problem.schedule.n_slots());
    std::vector<Volume> traded(n);
    for (std::size_t j = 0; j < problem.orders.size(); ++j) {
        const auto& o = problem.orders[j];
        double a = std::clamp(best.x[j], 0.0, 1.0);
        if (a * o.volume.mw() < kSnapMW) a = 0.0;
        if ((1.0 - a) * o.volume.mw() < kSnapMW) a = 1.0;
        out.fractions[o.id] = a;
        const Volume q = accepted_volume(o.volume, a);
        const Volume signed_q = o.side == Side::Buy ? q : -q;
        traded[static_cast<std::size_t>(o.product)] += signed_q;
        const double hours = hours_factor > 0 ? hours_factor : problem.calendar.product(o.product).duration_h;
        out.reward += signed_q.mw() * o.price.eur() * hours;
    }
    auto& sched = out.schedule;
    for (std::size_t i = 0; i < m; ++i) {
        const auto s = static_cast<std::size_t>(slots[i]);
        out.contracted[s] = traded[s].mw();
        const double net = problem.position.contracted[s] + out.contracted[s];
        double g = net > 0.0 ? net : 0.0;
        double c = net < 0.0 ? -net : 0.0;
        if (g <= kScheduleTolerance) g = 0.0;
        if (c <= kScheduleTolerance) c = 0.0;
        sched.discharge[s] = g;
        sched.charge[s] = c;
        out.d_discharge[s] = g - problem.schedule.discharge[s];
        out.d_charge[s] = c - problem.schedule.charge[s];
    }
    sched.recompute_soc(sp);
    for (std::size_t s = 0; s < n; ++s) out.mode[s] = sched.charge[s] > 0.0 ? 1 : 0;
    const auto issues = validate(sched, sp);
    if (!issues.empty())
        solver_failure("solution violates storage limits: " + issues.front() + (relaxed_leaf ? " (relaxed path)" : ""), problem);
    return out;
}

std::string dump_problem(const TradeProblem& p) {
    std::ostringstream os;
    const auto& c = p.calendar.config();
    const auto& s = p.params;
    os << "trade_problem 1\n";
    os << "step " << p.step << "\n";
    os << "settlement " << to_string(p.settlement) << "\n";
    os << "calendar " << c.n_products << ' ' << c.product_minutes << ' ' << c.first_delivery << ' ' << c.gate_open << ' '
       << c.gate_close_lead << ' ' << c.trading_start << ' ' << c.trading_step << ' ' << c.steps << "\n";
    os << "storage";
    for (double v : {s.soc_min, s.soc_max, s.c_min, s.c_max, s.g_min, s.g_max, s.eta, s.soc_init, s.soc_term})
        os << ' ' << fmt_double(v);
    os << "\n";
    for (std::size_t i = 0; i < p.schedule.charge.size(); ++i)
        os << "slot " << i << ' ' << fmt_double(p.position.contracted[i]) << ' ' << fmt_double(p.position.imbalance[i]) << ' '
           << fmt_double(p.schedule.discharge[i]) << ' ' << fmt_double(p.schedule.charge[i]) << "\n";
    for (const auto& o : p.orders)
        os << "order " << o.id << ' ' << o.product << ' ' << (o.side == Side::Buy ? 'B' : 'S') << ' ' << o.price.ticks() << ' '
           << o.volume.units() << ' ' << o.arrival_step << "\n";
    return os.str();
}

TradeProblem parse_problem(const std::string& text) {
    TradeProblem p;
    std::istringstream in(text);
    std::string line, tag;
    CalendarConfig cfg;
    bool have_calendar = false;
    std::vector<std::array<double, 4>> slots;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        ls >> tag;
        std::vector<std::string> f;
        for (std::string w; ls >> w;) f.push_back(w);
        const auto need = [&](std::size_t k) {
            if (f.size() != k) throw ValidationError("malformed problem dump line: " + line);
        };
        if (tag == "trade_problem") {
            need(1);
            if (f[0] != "1") throw VersionError("unsupported problem dump version " + f[0]);
        } else if (tag == "step") {
            need(1);
            p.step = std::stoi(f[0]);
        } else if (tag == "settlement") {
            need(1);
            p.settlement = f[0] == "power" ? Settlement::Power : Settlement::Energy;
        } else if (tag == "calendar") {
            need(8);
            int* dst[] = {&cfg.n_products, &cfg.product_minutes, &cfg.first_delivery, &cfg.gate_open,
                          &cfg.gate_close_lead, &cfg.trading_start, &cfg.trading_step, &cfg.steps};
            for (std::size_t i = 0; i < 8; ++i) *dst[i] = std::stoi(f[i]);
            have_calendar = true;
        } else if (tag == "storage") {
            need(9);
            double* dst[] = {&p.params.soc_min, &p.params.soc_max, &p.params.c_min, &p.params.c_max, &p.params.g_min,
                             &p.params.g_max, &p.params.eta, &p.params.soc_init, &p.params.soc_term};
            for (std::size_t i = 0; i < 9; ++i) *dst[i] = parse_double(f[i]);
        } else if (tag == "slot") {
            need(5);
            slots.push_back({parse_double(f[1]), parse_double(f[2]), parse_double(f[3]), parse_double(f[4])});
        } else if (tag == "order") {
            need(6);
            Order o;
            o.id = std::stoull(f[0]);
            o.product = std::stoi(f[1]);
            o.side = f[2] == "B" ? Side::Buy : Side::Sell;
            o.price = Price::from_ticks(std::stoll(f[3]));
            o.volume = Volume::from_units(std::stoll(f[4]));
            o.arrival_step = std::stoi(f[5]);
            p.orders.push_back(o);
        } else {
            throw ValidationError("unknown problem dump line: " + line);
        }
    }
    if (!have_calendar) throw ValidationError("problem dump lacks a calendar line");
    p.calendar = MarketCalendar(cfg);
    const auto n = static_cast<std::size_t>(cfg.n_products);
    if (slots.size() != n) throw ValidationError("problem dump must list every slot");
    p.position = MarketPosition::flat(cfg.n_products);
    p.schedule = StorageSchedule::flat(p.params, cfg.n_products, p.calendar.slot_hours());
    for (std::size_t i = 0; i < n; ++i) {
        p.position.contracted[i] = slots[i][0];
        p.position.imbalance[i] = slots[i][1];
        p.schedule.discharge[i] = slots[i][2];
        p.schedule.charge[i] = slots[i][3];
    }
    p.schedule.recompute_soc(p.params);
    return p;
}

}  // namespace cid
