#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cid {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error { using Error::Error; };
class HorizonError : public Error { using Error::Error; };
class ScheduleError : public Error { using Error::Error; };
class SolverError : public Error { using Error::Error; };
class TrainingError : public Error { using Error::Error; };
class VersionError : public Error { using Error::Error; };

class ParseError : public Error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& reason)
        : Error(file + ":" + std::to_string(line) + ": " + reason), file_(file), line_(line) {}

    const std::string& file() const { return file_; }
    std::size_t line() const { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

enum class Side : std::uint8_t { Sell, Buy };

inline Side opposite(Side s) { return s == Side::Sell ? Side::Buy : Side::Sell; }
inline const char* to_string(Side s) { return s == Side::Sell ? "Sell" : "Buy"; }

using OrderId = std::uint64_t;

// Power volume in fixed point. Exogenous orders live on a 0.001 MW grain; the
// finer internal unit lets partial acceptances from the trade solver land
// within 1e-12 MW of the exact fraction without leaving integer arithmetic.
class Volume {
public:
    static constexpr std::int64_t kUnitsPerMW = 1'000'000'000'000;
    static constexpr std::int64_t kGrainUnits = kUnitsPerMW / 1000;

    constexpr Volume() = default;
    static constexpr Volume from_units(std::int64_t u) { return Volume(u); }
    static Volume from_mw(double mw) { return Volume(std::llround(mw * static_cast<double>(kUnitsPerMW))); }
    // Rounds to the 0.001 MW grain.
    static Volume grain_from_mw(double mw) { return Volume(std::llround(mw * 1000.0) * kGrainUnits); }

    constexpr std::int64_t units() const { return units_; }
    double mw() const { return static_cast<double>(units_) / static_cast<double>(kUnitsPerMW); }
    constexpr bool on_grain() const { return units_ % kGrainUnits == 0; }

    constexpr auto operator<=>(const Volume&) const = default;
    constexpr Volume operator+(Volume o) const { return Volume(units_ + o.units_); }
    constexpr Volume operator-(Volume o) const { return Volume(units_ - o.units_); }
    constexpr Volume& operator+=(Volume o) { units_ += o.units_; return *this; }
    constexpr Volume& operator-=(Volume o) { units_ -= o.units_; return *this; }
    constexpr Volume operator-() const { return Volume(-units_); }

private:
    constexpr explicit Volume(std::int64_t u) : units_(u) {}
    std::int64_t units_ = 0;
};

// Limit price in ticks of 0.01 EUR/MWh.
class Price {
public:
    static constexpr std::int64_t kTicksPerEur = 100;

    constexpr Price() = default;
    static constexpr Price from_ticks(std::int64_t t) { return Price(t); }
    static Price from_eur(double eur) { return Price(std::llround(eur * kTicksPerEur)); }

    constexpr std::int64_t ticks() const { return ticks_; }
    double eur() const { return static_cast<double>(ticks_) / kTicksPerEur; }

    constexpr auto operator<=>(const Price&) const = default;

private:
    constexpr explicit Price(std::int64_t t) : ticks_(t) {}
    std::int64_t ticks_ = 0;
};

// How transaction cash is computed. Energy multiplies MW by the product
// duration; Power settles MW x EUR/MWh directly.
enum class Settlement : std::uint8_t { Energy, Power };

inline const char* to_string(Settlement s) { return s == Settlement::Energy ? "energy" : "power"; }

// High-level actions.
enum class Action : std::uint8_t { Trade, Idle };

inline const char* to_string(Action a) { return a == Action::Trade ? "trade" : "idle"; }

}  // namespace cid
