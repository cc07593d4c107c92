#pragma once

#include <cstdint>
#include <ctime>
#include <string>

namespace hh {

// Milliseconds. Controller-side values are monotonic (relative to boot /
// scenario start); persisted data points carry epoch milliseconds.
using Millis = std::int64_t;

// Renders epoch milliseconds as "dd/mm/yyyy HH:MM:SS" (UTC).
inline std::string format_timestamp(Millis epoch_ms) {
  std::time_t secs = static_cast<std::time_t>(epoch_ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[80];
  std::snprintf(buf, sizeof(buf), "%02d/%02d/%04d %02d:%02d:%02d", tm.tm_mday,
                tm.tm_mon + 1, tm.tm_year + 1900, tm.tm_hour, tm.tm_min,
                tm.tm_sec);
  return buf;
}

// Parses "dd/mm/yyyy HH:MM:SS" (UTC) back to epoch milliseconds. Returns
// false on malformed input.
inline bool parse_timestamp(const std::string& text, Millis& out) {
  std::tm tm{};
  int day = 0, mon = 0, year = 0, h = 0, m = 0, s = 0;
  if (std::sscanf(text.c_str(), "%d/%d/%d %d:%d:%d", &day, &mon, &year, &h, &m,
                  &s) != 6) {
    return false;
  }
  tm.tm_mday = day;
  tm.tm_mon = mon - 1;
  tm.tm_year = year - 1900;
  tm.tm_hour = h;
  tm.tm_min = m;
  tm.tm_sec = s;
  std::time_t secs = timegm(&tm);
  if (secs == static_cast<std::time_t>(-1)) return false;
  out = static_cast<Millis>(secs) * 1000;
  return true;
}

}  // namespace hh
