#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "hh/clock.hpp"
#include "hh/ingest.hpp"
#include "hh/wire.hpp"

namespace hh {

struct ReportOptions {
  char decimal_sep = '.';  // 'br' locale prints a comma
};

// Plain-text rendering of the dashboard: the eight blocks followed by the
// records table (oldest first), timestamps as dd/mm/yyyy HH:MM:SS.
inline std::string render_report(const std::string& device_id,
                                 const EightBlockSummary& s,
                                 const std::vector<WireDataPoint>& events_ascending,
                                 const ReportOptions& opts = {}) {
  auto rate_text = [&](const std::optional<std::int64_t>& x100) {
    return x100 ? format_percent_x100(*x100, opts.decimal_sep) + "%"
                : std::string("-");
  };

  std::string out;
  out += "Hand hygiene report - device " + device_id + "\n";
  out += std::string(34 + device_id.size(), '=') + "\n";
  char line[160];
  std::snprintf(line, sizeof(line), " [1] Bed accesses (NAc)     %10llu\n",
                static_cast<unsigned long long>(s.accesses));
  out += line;
  std::snprintf(line, sizeof(line), " [2] Bed exits (NE)         %10llu\n",
                static_cast<unsigned long long>(s.exits));
  out += line;
  std::snprintf(line, sizeof(line), " [3] HH opportunities (NO)  %10llu\n",
                static_cast<unsigned long long>(s.opportunities));
  out += line;
  std::snprintf(line, sizeof(line), " [4] Complete HH (NS)       %10llu\n",
                static_cast<unsigned long long>(s.sanitizations));
  out += line;
  out += " [5] HH rate over time      " + s.rate_series_ref + "\n";
  std::snprintf(line, sizeof(line), " [6] Occupancy (NOc)        %10llu\n",
                static_cast<unsigned long long>(s.occupancy));
  out += line;
  std::snprintf(line, sizeof(line), " [7] Current HH rate        %10s\n",
                rate_text(s.current_rate_percent_x100).c_str());
  out += line;
  std::snprintf(line, sizeof(line), " [8] Records                %10zu\n",
                events_ascending.size());
  out += line;
  out += "\n";
  std::snprintf(line, sizeof(line), "%-19s  %-11s  %8s  %5s %5s %5s %5s %5s  %-14s\n",
                "Timestamp", "Event", "TX Hyg", "NO", "NS", "NAc", "NE", "NOc",
                "RFID");
  out += line;
  out += std::string(94, '-') + "\n";
  for (const auto& w : events_ascending) {
    std::snprintf(line, sizeof(line),
                  "%-19s  %-11s  %8s  %5llu %5llu %5llu %5llu %5llu  %-14s\n",
                  format_timestamp(w.ts).c_str(), to_string(w.event),
                  rate_text(w.rate_percent_x100).c_str(),
                  static_cast<unsigned long long>(w.opportunities),
                  static_cast<unsigned long long>(w.sanitizations),
                  static_cast<unsigned long long>(w.accesses),
                  static_cast<unsigned long long>(w.exits),
                  static_cast<unsigned long long>(w.occupancy),
                  w.rfid_uid ? w.rfid_uid->c_str() : "-");
    out += line;
  }
  return out;
}

// Summary built locally from a record stream, mirroring what the service
// computes for the same device.
inline EightBlockSummary fold_summary(const std::string& device_id,
                                      const std::vector<WireDataPoint>& log) {
  EightBlockSummary s;
  s.rate_series_ref = "/api/v1/devices/" + device_id + "/rate-series";
  s.records_ref = "/api/v1/devices/" + device_id + "/events";
  if (!log.empty()) {
    const auto& last = log.back();
    s.accesses = last.accesses;
    s.exits = last.exits;
    s.opportunities = last.opportunities;
    s.sanitizations = last.sanitizations;
    s.occupancy = last.occupancy;
    s.current_rate_percent_x100 = compute_rate(last.counters()).percent_x100;
  }
  return s;
}

}  // namespace hh
