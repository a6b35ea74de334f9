#include "cidlab/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

namespace cid {

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw ValidationError("quantile of an empty set");
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("quantile level outside [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Stats describe(const std::vector<double>& values) {
    Stats s;
    s.count = values.size();
    if (values.empty()) return s;
    for (double v : values) s.sum += v;
    s.mean = s.sum / static_cast<double>(values.size());
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    s.min = *lo;
    s.max = *hi;
    s.q25 = quantile(values, 0.25);
    s.q50 = quantile(values, 0.50);
    s.q75 = quantile(values, 0.75);
    return s;
}

std::optional<double> profitability_ratio(double fq, double ri) {
    if (!(ri > 0.0)) return std::nullopt;
    return 100.0 * (fq - ri) / ri;
}

BacktestReport make_report(const std::vector<DailyReturn>& fq, const std::vector<DailyReturn>& ri) {
    std::map<std::string, double> bench;
    for (const auto& r : ri)
        if (!bench.emplace(r.day, r.value).second) throw ValidationError("benchmark lists day " + r.day + " twice");
    if (fq.size() != ri.size()) throw ValidationError("return lists cover different numbers of days");
    BacktestReport rep;
    std::vector<double> vf, vr, ratios;
    std::set<std::string> seen;
    for (const auto& r : fq) {
        const auto it = bench.find(r.day);
        if (it == bench.end()) throw ValidationError("day " + r.day + " has no benchmark return");
        if (!seen.insert(r.day).second) throw ValidationError("policy lists day " + r.day + " twice");
        DayComparison d{r.day, r.value, it->second, profitability_ratio(r.value, it->second)};
        if (d.ratio) ratios.push_back(*d.ratio);
        else ++rep.excluded;
        vf.push_back(d.fq);
        vr.push_back(d.ri);
        rep.days.push_back(d);
    }
    rep.fq = describe(vf);
    rep.ri = describe(vr);
    rep.ratio = describe(ratios);
    rep.r_sum = profitability_ratio(rep.fq.sum, rep.ri.sum);
    return rep;
}

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

}  // namespace

std::string render_table(const BacktestReport& rep) {
    std::ostringstream os;
    for (const auto& [k, v] : rep.meta) os << "# " << k << ": " << v << '\n';
    char line[160];
    std::snprintf(line, sizeof line, "%-6s %14s %14s %10s\n", "", "V_FQ (EUR)", "V_RI (EUR)", "r (%)");
    os << line;
    const bool have_ratio = rep.ratio.count > 0;
    auto row = [&](const char* name, double f, double r, std::optional<double> q) {
        std::snprintf(line, sizeof line, "%-6s %14.2f %14.2f %10s\n", name, f, r,
                      q ? fmt("%.2f", *q).c_str() : "n/a");
        os << line;
    };
    auto rq = [&](double v) { return have_ratio ? std::optional<double>(v) : std::nullopt; };
    row("mean", rep.fq.mean, rep.ri.mean, rq(rep.ratio.mean));
    row("min", rep.fq.min, rep.ri.min, rq(rep.ratio.min));
    row("25%", rep.fq.q25, rep.ri.q25, rq(rep.ratio.q25));
    row("50%", rep.fq.q50, rep.ri.q50, rq(rep.ratio.q50));
    row("75%", rep.fq.q75, rep.ri.q75, rq(rep.ratio.q75));
    row("max", rep.fq.max, rep.ri.max, rq(rep.ratio.max));
    row("sum", rep.fq.sum, rep.ri.sum, rep.r_sum);
    os << "days " << rep.days.size() << ", excluded from r (V_RI <= 0) " << rep.excluded << '\n';
    return os.str();
}

std::string report_csv(const BacktestReport& rep) {
    std::ostringstream os;
    os << "day,fq,ri,ratio\n";
    for (const auto& d : rep.days) {
        os << d.day << ',' << format_double(d.fq) << ',' << format_double(d.ri) << ',';
        if (d.ratio) os << format_double(*d.ratio);
        os << '\n';
    }
    return os.str();
}

std::string ratio_histogram(const BacktestReport& rep, double bin_width) {
    if (!(bin_width > 0.0)) throw ValidationError("bin width must be positive");
    std::map<long, int> bins;
    for (const auto& d : rep.days)
        if (d.ratio) ++bins[static_cast<long>(std::floor(*d.ratio / bin_width))];
    std::ostringstream os;
    os << "# r_d (%) bin center, days\n";
    if (bins.empty()) return os.str();
    for (long b = bins.begin()->first; b <= bins.rbegin()->first; ++b) {
        const auto it = bins.find(b);
        os << format_double((static_cast<double>(b) + 0.5) * bin_width) << ' ' << (it == bins.end() ? 0 : it->second)
           << '\n';
    }
    return os.str();
}

std::string format_returns(const std::vector<DailyReturn>& returns) {
    std::ostringstream os;
    os << "day,policy,return\n";
    for (const auto& r : returns) {
        if (r.day.find_first_of(",\n") != std::string::npos || r.policy.find_first_of(",\n") != std::string::npos)
            throw ValidationError("day and policy names cannot contain commas");
        os << r.day << ',' << r.policy << ',' << format_double(r.value) << '\n';
    }
    return os.str();
}

std::vector<DailyReturn> parse_returns(const std::string& text, const std::string& source) {
    std::istringstream is(text);
    std::string line;
    std::size_t n = 0;
    std::vector<DailyReturn> out;
    while (std::getline(is, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (n == 1) {
            if (line != "day,policy,return") throw ParseError(source, n, "expected header 'day,policy,return'");
            continue;
        }
        if (line.empty()) continue;
        const auto a = line.find(',');
        const auto b = a == std::string::npos ? a : line.find(',', a + 1);
        if (b == std::string::npos || line.find(',', b + 1) != std::string::npos)
            throw ParseError(source, n, "expected 3 fields");
        DailyReturn r{line.substr(0, a), line.substr(a + 1, b - a - 1), 0.0};
        try {
            r.value = parse_double(line.substr(b + 1));
        } catch (const ValidationError& e) {
            throw ParseError(source, n, e.what());
        }
        if (r.day.empty() || !std::isfinite(r.value)) throw ParseError(source, n, "empty day or non-finite return");
        out.push_back(r);
    }
    if (n == 0) throw ParseError(source, 1, "empty file");
    return out;
}

BacktestResult backtest(const std::vector<DayRecord>& days, const Checkpoint& model, int threads) {
    if (model.policies.empty()) throw ValidationError("model holds no policies");
    std::vector<Policy> policies;
    for (const auto& p : model.policies) policies.push_back(greedy_policy(std::make_shared<const QEnsemble>(p)));
    BacktestResult out;
    out.fq.resize(days.size());
    out.ri.resize(days.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::string> errors(days.size());
    auto work = [&] {
        for (std::size_t i = next.fetch_add(1); i < days.size(); i = next.fetch_add(1)) {
            try {
                double sum = 0.0;
                for (const auto& p : policies) sum += run_policy(days[i], p, "fq", model.env).value;
                out.fq[i] = {days[i].id, "fq", sum / static_cast<double>(policies.size())};
                out.ri[i] = rolling_intrinsic(days[i], model.env);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const int n = std::max(1, std::min<int>(threads, static_cast<int>(days.size())));
    std::vector<std::thread> pool;
    for (int k = 1; k < n; ++k) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (!e.empty()) throw Error("backtest failed: " + e);
    return out;
}

}  // namespace cid
