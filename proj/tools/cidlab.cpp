#include "cidlab/day.hpp"
#include "cidlab/episode.hpp"
#include "cidlab/fitted_q.hpp"
#include "cidlab/report.hpp"
#include "cidlab/rng.hpp"
#include "cidlab/runtime.hpp"
#include "cidlab/synth.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace cid;

namespace {

struct EnvFlags {
    std::string calendar = "desk";
    std::string storage = "desk";
    std::string settlement = "energy";
    int history = 4;

    void add(CLI::App* app, bool with_history) {
        app->add_option("--calendar", calendar, "Market calendar")->check(CLI::IsMember({"desk", "full"}));
        app->add_option("--storage", storage, "Storage unit")->check(CLI::IsMember({"desk", "full"}));
        app->add_option("--settlement", settlement, "Cash per MW or per MWh")
            ->check(CLI::IsMember({"energy", "power"}));
        if (with_history) app->add_option("--history", history, "Observations per pseudo-state")->check(CLI::PositiveNumber);
    }

    EpisodeConfig env() const {
        EpisodeConfig e;
        e.calendar = calendar == "full" ? MarketCalendar::full_case() : MarketCalendar::desk_case();
        e.storage = storage == "full" ? StorageParams::full_case() : StorageParams::desk_case();
        e.settlement = settlement == "energy" ? Settlement::Energy : Settlement::Power;
        e.history = history;
        return e;
    }
};

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw Error("cannot read " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f || !(f << text)) throw Error("cannot write " + p.string());
}

std::string fmt_seconds(double s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f s", s);
    return buf;
}

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : " ") + x;
    return s;
}

std::vector<std::string> words(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string w; is >> w;) out.push_back(w);
    return out;
}

std::vector<DayRecord> load_checked(const fs::path& dir, const MarketCalendar& cal) {
    auto days = load_days(dir);
    if (days.empty()) throw ValidationError("no day files in " + dir.string());
    for (const auto& d : days) validate_day(d, cal);
    return days;
}

std::vector<DayRecord> pick(const std::vector<DayRecord>& all, const std::vector<std::string>& ids) {
    std::map<std::string, const DayRecord*> by_id;
    for (const auto& d : all) by_id[d.id] = &d;
    std::vector<DayRecord> out;
    for (const auto& id : ids) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw ValidationError("day " + id + " named by the model is not in the data directory");
        out.push_back(*it->second);
    }
    return out;
}

void write_report(const BacktestReport& rep, const std::vector<DailyReturn>& fq, const std::vector<DailyReturn>& ri,
                  const fs::path& out) {
    write_file(out / "fq.csv", format_returns(fq));
    write_file(out / "ri.csv", format_returns(ri));
    write_file(out / "report.csv", report_csv(rep));
    write_file(out / "ratios.dat", ratio_histogram(rep));
    write_file(out / "table.txt", render_table(rep));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Intraday storage trading: synthetic data, fitted-Q training and backtests"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "key=value file; keys take the form <command>.<option>, flags override");
    app.allow_config_extras(CLI::config_extras_mode::error);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Write seeded synthetic day files");
    int gen_days = 50;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    SyntheticConfig synth;
    EnvFlags gen_env;
    gen->add_option("--days", gen_days, "Number of days")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "Master seed");
    gen->add_option("--out", gen_out, "Output directory (default: data root)");
    gen->add_option("--volatility", synth.volatility, "Mid-price volatility, EUR/MWh per step");
    gen->add_option("--orders-per-step", synth.orders_per_step, "Poisson order rate per product and step");
    gen->add_option("--arbitrage", synth.arbitrage_probability, "Arbitrage injection probability per step");
    gen_env.add(gen, false);

    // train
    auto* train = app.add_subcommand("train", "Fit time-variant Q-functions on the training split");
    std::string tr_data, tr_out = "model.txt", tr_log;
    double tr_split = 0.7;
    int tr_repeats = 1;
    TrainConfig tc;
    RuntimeConfig rc;
    EnvFlags tr_env;
    train->add_option("--data", tr_data, "Day directory (default: data root)");
    train->add_option("--split", tr_split, "Training share of the days")->check(CLI::Range(0.0, 1.0));
    train->add_option("--episodes", tc.episodes_per_day, "Episodes per training day (E)")->check(CLI::PositiveNumber);
    train->add_option("--ep", tc.refit_every, "Episodes between refits")->check(CLI::PositiveNumber);
    train->add_option("--actors", rc.actors, "Actor threads")->check(CLI::PositiveNumber);
    train->add_option("--seed", tc.seed, "Master seed");
    train->add_option("--out", tr_out, "Model file");
    train->add_option("--repeats", tr_repeats, "Policies trained with derived seeds")->check(CLI::PositiveNumber);
    train->add_option("--epochs", tc.mlp.epochs, "Network epochs per fit")->check(CLI::PositiveNumber);
    train->add_option("--regressor", tc.regressor, "Regressor")->check(CLI::IsMember({"mlp", "tabular"}));
    train->add_option("--capacity", tc.capacity, "Trajectory store capacity")->check(CLI::PositiveNumber);
    train->add_option("--local-buffer", rc.local_buffer, "Trajectories per actor flush")->check(CLI::PositiveNumber);
    train->add_option("--min-buffer", rc.min_buffer, "Trajectories before the first refit");
    train->add_flag("--deterministic", rc.deterministic, "Single actor, learner inline (reproducible)");
    train->add_option("--log", tr_log, "Episode log file (default: stderr)");
    tr_env.add(train, true);

    // backtest
    auto* bt = app.add_subcommand("backtest", "Replay test days with the model and the rolling intrinsic benchmark");
    std::string bt_data, bt_model = "model.txt", bt_out = "report", bt_days = "test";
    int bt_threads = 1;
    bt->add_option("--data", bt_data, "Day directory (default: data root)");
    bt->add_option("--model", bt_model, "Model file");
    bt->add_option("--out", bt_out, "Report directory");
    bt->add_option("--days", bt_days, "Which days to replay")->check(CLI::IsMember({"test", "train", "all"}));
    bt->add_option("--threads", bt_threads, "Worker threads")->check(CLI::PositiveNumber);

    // report
    auto* rp = app.add_subcommand("report", "Tabulate returns from CSV files");
    std::string rp_fq, rp_ri, rp_out;
    rp->add_option("--fq", rp_fq, "Policy returns CSV")->required();
    rp->add_option("--ri", rp_ri, "Benchmark returns CSV")->required();
    rp->add_option("--out", rp_out, "Also write report files to this directory");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Run one day and print every step");
    std::string sim_day, sim_policy = "ri";
    EnvFlags sim_env;
    sim->add_option("--day", sim_day, "Day file")->required();
    sim->add_option("--policy", sim_policy, "ri, idle or model:PATH");
    sim_env.add(sim, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            synth.check();
            const auto env = gen_env.env();
            const fs::path out = data_root(gen_out);
            for (const auto& d : synth_generate(synth, env.calendar, gen_days, gen_seed))
                save_day(d, out / (d.id + ".csv"));
            std::cout << "wrote " << gen_days << " days to " << out.string() << '\n';
        } else if (*train) {
            const auto env = tr_env.env();
            const auto all = load_checked(data_root(tr_data), env.calendar);
            const auto sp = split(all.size(), tr_split, tc.seed);
            std::vector<DayRecord> train_days;
            std::vector<std::string> train_ids, test_ids;
            for (auto i : sp.train) {
                train_days.push_back(all[i]);
                train_ids.push_back(all[i].id);
            }
            for (auto i : sp.test) test_ids.push_back(all[i].id);

            std::ofstream log_file;
            if (!tr_log.empty()) {
                log_file.open(tr_log);
                if (!log_file) throw Error("cannot write " + tr_log);
            }
            std::ostream& log_os = tr_log.empty() ? std::cerr : log_file;
            const auto t0 = std::chrono::steady_clock::now();
            Checkpoint model;
            model.env = env;
            int refits = 0;
            for (int r = 0; r < tr_repeats; ++r) {
                TrainConfig cfg = tc;
                cfg.seed = r == 0 ? tc.seed : derive_seed(tc.seed, static_cast<std::uint64_t>(r));
                auto res = run(train_days, env, cfg, rc, [&](const std::string& line) {
                    log_os << (tr_repeats > 1 ? "policy=" + std::to_string(r) + " " : "") << line << '\n';
                });
                refits += res.refits;
                model.policies.push_back(std::move(res.ensemble));
            }
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            model.meta = {{"train_days", join(train_ids)}, {"test_days", join(test_ids)},
                          {"seed", std::to_string(tc.seed)},  {"episodes_per_day", std::to_string(tc.episodes_per_day)},
                          {"refit_every", std::to_string(tc.refit_every)}, {"actors", std::to_string(rc.actors)},
                          {"regressor", tc.regressor}, {"split", format_double(tr_split)}};
            save_checkpoint(model, tr_out);
            std::cout << "trained " << tr_repeats << " polic" << (tr_repeats == 1 ? "y" : "ies") << " on "
                      << train_days.size() << " days (" << refits << " refits, " << fmt_seconds(secs) << ") -> "
                      << tr_out << '\n';
        } else if (*bt) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto model = load_checkpoint(bt_model);
            const auto all = load_checked(data_root(bt_data), model.env.calendar);
            std::vector<DayRecord> days;
            if (bt_days == "all") days = all;
            else {
                const auto it = model.meta.find(bt_days == "test" ? "test_days" : "train_days");
                if (it == model.meta.end()) throw ValidationError("model does not list its " + bt_days + " days");
                days = pick(all, words(it->second));
            }
            if (days.empty()) throw ValidationError("no days to backtest");
            const auto res = backtest(days, model, bt_threads);
            auto rep = make_report(res.fq, res.ri);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            rep.meta = {{"settlement", to_string(model.env.settlement)},
                        {"policies", std::to_string(model.policies.size())},
                        {"days", bt_days},
                        {"runtime", fmt_seconds(secs)}};
            write_report(rep, res.fq, res.ri, bt_out);
            std::cout << render_table(rep);
        } else if (*rp) {
            const auto fq = parse_returns(read_file(rp_fq), rp_fq);
            const auto ri = parse_returns(read_file(rp_ri), rp_ri);
            const auto rep = make_report(fq, ri);
            if (!rp_out.empty()) write_report(rep, fq, ri, rp_out);
            std::cout << render_table(rep);
        } else if (*sim) {
            auto env = sim_env.env();
            Policy policy;
            if (sim_policy == "ri") policy = constant_policy(Action::Trade);
            else if (sim_policy == "idle") policy = constant_policy(Action::Idle);
            else if (sim_policy.rfind("model:", 0) == 0) {
                const auto model = load_checkpoint(sim_policy.substr(6));
                if (model.policies.empty()) throw ValidationError("model holds no policies");
                env = model.env;
                policy = greedy_policy(std::make_shared<const QEnsemble>(model.policies.front()));
            } else {
                throw ValidationError("policy must be ri, idle or model:PATH");
            }
            const auto day = load_day(sim_day);
            validate_day(day, env.calendar);
            const auto tr = run_episode(day, env, policy);
            char line[128];
            for (int t = 0; t < tr.steps(); ++t) {
                std::snprintf(line, sizeof line, "step=%d minute=%d action=%s reward=%.2f\n", t,
                              env.calendar.time_of_step(t), to_string(tr.actions[static_cast<std::size_t>(t)]),
                              tr.rewards[static_cast<std::size_t>(t)]);
                std::cout << line;
            }
            std::snprintf(line, sizeof line, "day=%s total=%.2f\n", tr.day.c_str(), tr.total());
            std::cout << line;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
