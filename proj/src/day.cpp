#include "cidlab/day.hpp"

#include "cidlab/types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace cid {

namespace {

constexpr std::size_t kExogFields = 24 + 4 + 4 + 3;

std::string shortest(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

// Fixed-point decimal with exactly `decimals` digits after the point.
std::string fixed(std::int64_t scaled, int decimals) {
    std::int64_t div = 1;
    for (int i = 0; i < decimals; ++i) div *= 10;
    const bool neg = scaled < 0;
    const std::uint64_t a = neg ? static_cast<std::uint64_t>(-(scaled + 1)) + 1 : static_cast<std::uint64_t>(scaled);
    std::string frac = std::to_string(a % static_cast<std::uint64_t>(div));
    frac.insert(0, static_cast<std::size_t>(decimals) - frac.size(), '0');
    return (neg ? "-" : "") + std::to_string(a / static_cast<std::uint64_t>(div)) + "." + frac;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

class Reader {
public:
    Reader(std::string source, std::size_t line) : source_(std::move(source)), line_(line) {}

    [[noreturn]] void fail(const std::string& reason) const { throw ParseError(source_, line_, reason); }

    long long integer(const std::string& s, const char* what) const {
        long long v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) fail(std::string("bad ") + what + " '" + s + "'");
        return v;
    }

    double real(const std::string& s, const char* what) const {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
            fail(std::string("bad ") + what + " '" + s + "'");
        return v;
    }

    // Decimal with at most `decimals` fractional digits, scaled to an integer.
    long long decimal(const std::string& s, int decimals, const char* what) const {
        std::size_t i = 0;
        bool neg = false;
        if (i < s.size() && (s[i] == '-' || s[i] == '+')) neg = s[i++] == '-';
        long long whole = 0, frac = 0;
        int digits = 0, frac_digits = 0;
        for (; i < s.size() && s[i] != '.'; ++i, ++digits) {
            if (s[i] < '0' || s[i] > '9' || whole > 1'000'000'000'000LL) fail(std::string("bad ") + what + " '" + s + "'");
            whole = whole * 10 + (s[i] - '0');
        }
        if (i < s.size()) {
            for (++i; i < s.size(); ++i, ++frac_digits) {
                if (s[i] < '0' || s[i] > '9') fail(std::string("bad ") + what + " '" + s + "'");
                if (frac_digits == decimals) fail(std::string(what) + " '" + s + "' has too many decimals");
                frac = frac * 10 + (s[i] - '0');
            }
        }
        if (digits + frac_digits == 0) fail(std::string("bad ") + what + " '" + s + "'");
        for (int k = frac_digits; k < decimals; ++k) frac *= 10;
        long long scale = 1;
        for (int k = 0; k < decimals; ++k) scale *= 10;
        const long long v = whole * scale + frac;
        return neg ? -v : v;
    }

private:
    std::string source_;
    std::size_t line_;
};

}  // namespace

std::string format_day(const DayRecord& day) {
    if (day.arrivals.size() != day.exog.size()) throw ValidationError("day record: arrivals and exogenous steps differ");
    if (day.id.empty() || day.id.find_first_of(",\n\r") != std::string::npos)
        throw ValidationError("day id must be non-empty without commas or line breaks");
    std::ostringstream os;
    os << "version,day\n" << kDayFormatVersion << ',' << day.id << '\n';
    for (std::size_t t = 0; t < day.exog.size(); ++t) {
        const auto& e = day.exog[t];
        os << t << ",EXOG";
        for (double v : e.day_ahead) os << ',' << shortest(v);
        for (double v : e.imbalance_price) os << ',' << shortest(v);
        for (double v : e.system_imbalance) os << ',' << shortest(v);
        os << ',' << e.hour << ',' << e.month << ',' << (e.weekend ? 1 : 0) << '\n';
        for (const auto& o : day.arrivals[t]) {
            if (!o.volume.on_grain()) throw ValidationError("order volume is finer than 0.001 MW");
            os << t << ",ORDER," << o.product << ',' << (o.side == Side::Buy ? 'B' : 'S') << ','
               << fixed(o.price.ticks(), 2) << ',' << fixed(o.volume.units() / Volume::kGrainUnits, 3) << '\n';
        }
    }
    return os.str();
}

DayRecord parse_day(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    const auto next = [&]() {
        if (!std::getline(in, line)) return false;
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };
    if (!next() || line != "version,day") throw ParseError(source, n ? n : 1, "expected header 'version,day'");
    if (!next()) throw ParseError(source, n + 1, "missing version line");
    DayRecord day;
    {
        const auto f = split_csv(line);
        Reader r(source, n);
        if (f.size() != 2) r.fail("version line needs 2 fields");
        const auto version = r.integer(f[0], "version");
        if (version != kDayFormatVersion)
            throw VersionError(source + ": day format version " + f[0] + " is not supported (expected " +
                               std::to_string(kDayFormatVersion) + ")");
        if (f[1].empty()) r.fail("empty day id");
        day.id = f[1];
    }
    OrderId next_id = 1;
    long long current = -1;
    while (next()) {
        if (line.empty()) continue;
        const auto f = split_csv(line);
        Reader r(source, n);
        if (f.size() < 2) r.fail("expected 'step,kind,...'");
        const long long step = r.integer(f[0], "step");
        if (step < 0) r.fail("negative step");
        if (step < current) r.fail("steps must be non-decreasing");
        if (step > current + 1) r.fail("step " + std::to_string(current + 1) + " has no EXOG row");
        if (f[1] == "EXOG") {
            if (step == current) r.fail("second EXOG row for step " + f[0]);
            if (f.size() != 2 + kExogFields) r.fail("EXOG row needs " + std::to_string(kExogFields) + " values");
            ExogRecord e;
            std::size_t k = 2;
            for (auto& v : e.day_ahead) v = r.real(f[k++], "day-ahead price");
            for (auto& v : e.imbalance_price) v = r.real(f[k++], "imbalance price");
            for (auto& v : e.system_imbalance) v = r.real(f[k++], "system imbalance");
            e.hour = static_cast<int>(r.integer(f[k++], "hour"));
            e.month = static_cast<int>(r.integer(f[k++], "month"));
            const auto we = r.integer(f[k++], "weekend flag");
            if (e.hour < 0 || e.hour > 23) r.fail("hour outside 0..23");
            if (e.month < 1 || e.month > 12) r.fail("month outside 1..12");
            if (we != 0 && we != 1) r.fail("weekend flag must be 0 or 1");
            e.weekend = we == 1;
            day.exog.push_back(e);
            day.arrivals.emplace_back();
            current = step;
        } else if (f[1] == "ORDER") {
            if (step != current) r.fail("ORDER row before the EXOG row of its step");
            if (f.size() != 6) r.fail("ORDER row needs product, side, price, volume");
            Order o;
            o.id = next_id++;
            o.arrival_step = static_cast<int>(step);
            const auto product = r.integer(f[2], "product");
            if (product < 0) r.fail("negative product index");
            o.product = static_cast<int>(product);
            if (f[3] == "B") o.side = Side::Buy;
            else if (f[3] == "S") o.side = Side::Sell;
            else r.fail("side must be S or B");
            o.price = Price::from_ticks(r.decimal(f[4], 2, "price"));
            const auto grains = r.decimal(f[5], 3, "volume");
            if (grains <= 0) r.fail("volume must be positive");
            o.volume = Volume::from_units(grains * Volume::kGrainUnits);
            day.arrivals.back().push_back(o);
        } else {
            r.fail("unknown row kind '" + f[1] + "'");
        }
    }
    if (day.exog.empty()) throw ParseError(source, n, "day has no steps");
    return day;
}

DayRecord load_day(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open day file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_day(ss.str(), path.string());
}

void save_day(const DayRecord& day, const std::filesystem::path& path) {
    const auto text = format_day(day);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write day file " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

void validate_day(const DayRecord& day, const MarketCalendar& calendar) {
    if (day.steps() != calendar.steps())
        throw ValidationError("day " + day.id + " has " + std::to_string(day.steps() + 1) + " steps, calendar needs " +
                              std::to_string(calendar.steps() + 1));
    for (std::size_t t = 0; t < day.arrivals.size(); ++t) {
        const int minute = calendar.time_of_step(static_cast<int>(t));
        for (const auto& o : day.arrivals[t]) {
            if (o.product >= calendar.n_slots() || !calendar.is_open(o.product, minute))
                throw ValidationError("day " + day.id + " step " + std::to_string(t) + ": order for product " +
                                      std::to_string(o.product) + " which is not open");
        }
    }
}

std::vector<DayRecord> load_days(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw Error("data directory " + dir.string() + " does not exist");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<DayRecord> days;
    for (const auto& f : files) days.push_back(load_day(f));
    return days;
}

std::filesystem::path data_root(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("CIDLAB_DATA"); env != nullptr && *env != '\0') return env;
    return "data";
}

Split split(std::size_t n_days, double train_fraction, std::uint64_t seed) {
    if (n_days == 0) throw ValidationError("cannot split an empty dataset");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ValidationError("train fraction must lie in (0, 1)");
    std::vector<std::size_t> idx(n_days);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n_days)));
    if (n_days >= 2) n_train = std::clamp<std::size_t>(n_train, 1, n_days - 1);
    else n_train = 1;
    Split s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

}  // namespace cid
