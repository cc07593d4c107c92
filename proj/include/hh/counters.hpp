#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

namespace hh {

// The six tally variables kept by the controller, plus anomaly bookkeeping.
// Column names in parentheses follow the records table the device publishes.
struct CounterState {
  std::uint64_t accesses = 0;       // NAc: bed accesses detected
  std::uint64_t exits = 0;          // NE:  bed exits detected
  std::uint64_t occupancy = 0;      // NOc: people currently inside
  std::uint64_t opportunities = 0;  // NO:  hygiene opportunities, 2 per access
  std::uint64_t sanitizations = 0;  // NS:  completed 11-step procedures
  std::uint64_t ignored_exits = 0;  // exit seen while occupancy was 0
  bool overrate_flag = false;       // NS > NO (more washes than opportunities)

  bool operator==(const CounterState&) const = default;
};

// NS / NO as an exact ratio plus a percent rounded half-up to two decimals.
// The percent is stored scaled by 100 (5417 == 54.17%) and is absent while
// the denominator is zero.
struct HygieneRate {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 0;
  std::optional<std::int64_t> percent_x100;

  bool operator==(const HygieneRate&) const = default;
};

inline HygieneRate compute_rate(const CounterState& c) {
  HygieneRate r;
  r.numerator = c.sanitizations;
  r.denominator = c.opportunities;
  if (c.opportunities > 0) {
    // round-half-up(10000 * NS / NO) == floor((2*10000*NS + NO) / (2*NO))
    std::uint64_t num = 20000ULL * c.sanitizations + c.opportunities;
    r.percent_x100 = static_cast<std::int64_t>(num / (2ULL * c.opportunities));
  }
  return r;
}

// "5417" -> "54.17"; decimal separator is configurable for report locales.
inline std::string format_percent_x100(std::int64_t x100, char sep = '.') {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%lld%c%02lld",
                static_cast<long long>(x100 / 100), sep,
                static_cast<long long>(x100 % 100));
  return buf;
}

}  // namespace hh
