#pragma once

#include "cidlab/episode.hpp"
#include "cidlab/fitted_q.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cid {

// Descriptive statistics; quartiles interpolate between order statistics
// (Hyndman-Fan type 7).
struct Stats {
    std::size_t count = 0;
    double mean = 0.0, min = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, max = 0.0, sum = 0.0;
};

double quantile(std::vector<double> values, double p);
Stats describe(const std::vector<double>& values);

// Signed percentage difference of fq over ri; nullopt unless ri > 0.
std::optional<double> profitability_ratio(double fq, double ri);

struct DayComparison {
    std::string day;
    double fq = 0.0;
    double ri = 0.0;
    std::optional<double> ratio;  // r_d, %
};

struct BacktestReport {
    Stats fq, ri;
    Stats ratio;                 // over days with a defined r_d
    std::optional<double> r_sum; // %, from the summed returns
    std::size_t excluded = 0;    // days with V_RI <= 0
    std::vector<DayComparison> days;
    std::map<std::string, std::string> meta;
};

// Both lists must cover the same days; order follows `fq`.
BacktestReport make_report(const std::vector<DailyReturn>& fq, const std::vector<DailyReturn>& ri);

// Fixed-width table: rows mean, min, 25%, 50%, 75%, max, sum; columns V_FQ,
// V_RI and r (the sum row of r is r_sum).
std::string render_table(const BacktestReport& report);
// day,fq,ri,ratio with an empty ratio when undefined.
std::string report_csv(const BacktestReport& report);
// Histogram of r_d: "bin_center count" lines for gnuplot.
std::string ratio_histogram(const BacktestReport& report, double bin_width = 1.0);

// day,policy,return
std::string format_returns(const std::vector<DailyReturn>& returns);
std::vector<DailyReturn> parse_returns(const std::string& text, const std::string& source = "<memory>");

struct BacktestResult {
    std::vector<DailyReturn> fq;  // mean over the model's policies
    std::vector<DailyReturn> ri;
};

// Greedy replay of every policy in `model` plus the benchmark on each day.
// Days are spread over `threads` workers; results keep the input order.
BacktestResult backtest(const std::vector<DayRecord>& days, const Checkpoint& model, int threads = 1);

}  // namespace cid
