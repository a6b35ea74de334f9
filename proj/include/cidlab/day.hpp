#pragma once

#include "cidlab/calendar.hpp"
#include "cidlab/features.hpp"
#include "cidlab/order_book.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace cid {

inline constexpr int kDayFormatVersion = 1;

// One trading day: order arrivals in (t - dt, t] and the exogenous record for
// each decision step t = 0..K. Order ids follow file order within the day.
struct DayRecord {
    std::string id;
    std::vector<std::vector<Order>> arrivals;
    std::vector<ExogRecord> exog;

    int steps() const { return static_cast<int>(exog.size()) - 1; }
    bool operator==(const DayRecord&) const = default;
};

// CSV day file:
//   version,day
//   1,<day id>
//   <step>,EXOG,<24 day-ahead>,<4 imbalance prices>,<4 system imbalances>,<hour>,<month>,<weekend>
//   <step>,ORDER,<product>,<S|B>,<price, 2 dp>,<volume MW, 3 dp>
// Steps are non-decreasing; each step has exactly one EXOG row.
std::string format_day(const DayRecord& day);
DayRecord parse_day(const std::string& text, const std::string& source = "<memory>");
DayRecord load_day(const std::filesystem::path& path);
void save_day(const DayRecord& day, const std::filesystem::path& path);

// Throws ValidationError unless the record has K + 1 steps for `calendar` and
// every arrival targets a product open at its step.
void validate_day(const DayRecord& day, const MarketCalendar& calendar);

// All *.csv day files of a directory, sorted by file name.
std::vector<DayRecord> load_days(const std::filesystem::path& dir);

// Data root: `flag` when non-empty, else $CIDLAB_DATA, else "data".
std::filesystem::path data_root(const std::string& flag = {});

// Uniform split without replacement; n_train = round(fraction * N) clamped to
// [1, N - 1] when N >= 2.
struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};
Split split(std::size_t n_days, double train_fraction, std::uint64_t seed);

}  // namespace cid
