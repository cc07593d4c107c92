#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "hh/scenario.hpp"
#include "hh/util.hpp"

namespace hh {

enum class SampleKind { ir_a = 0, ir_b = 1, ultrasonic = 2, rfid = 3 };

struct SensorSample {
  Millis ts = 0;
  SampleKind kind = SampleKind::ir_a;
  int mm = 0;        // distance samples
  std::string uid;   // rfid samples
};

// Offset from the wash start at which a scripted badge is presented.
inline constexpr Millis kBadgeOffsetMs = 500;
// Ultrasonic sample cadence while a person is at the tap.
inline constexpr Millis kTapSamplePeriodMs = 250;

// Synthesizes the raw sensor stream for a scenario. Deterministic in
// (scenario, seed); the Gaussian distance jitter (sigma 10 mm, clamped to
// +-30 mm) never crosses a trip threshold or the presence dead band, so
// outcomes are noise-free while the parsing paths still see noisy values.
inline std::vector<SensorSample> generate_trace(const Scenario& sc,
                                                std::uint64_t seed) {
  SplitMix64 rng(seed ^ 0x68685f74726163ULL);
  auto jitter = [&]() { return static_cast<int>(rng.next_gaussian(10.0)); };

  const int beam_high = sc.geometry.beam_trip_mm + 150;
  const int beam_low = sc.geometry.beam_trip_mm - 150;
  const int tap_present = sc.config.tap_present_mm - 100;
  const int tap_absent = sc.config.tap_absent_mm + 100;
  const Millis rearm_off = sc.geometry.debounce_ms + 10;

  std::vector<SensorSample> out;
  auto distance = [&](Millis ts, SampleKind kind, int base) {
    out.push_back(SensorSample{ts, kind, base + jitter(), {}});
  };

  // Quiet baselines so the first falling edge is a real edge.
  distance(0, SampleKind::ir_a, beam_high);
  distance(0, SampleKind::ir_b, beam_high);
  distance(0, SampleKind::ultrasonic, tap_absent);

  auto crossing = [&](Millis ts, Millis gap, bool entering) {
    SampleKind first = entering ? SampleKind::ir_a : SampleKind::ir_b;
    SampleKind second = entering ? SampleKind::ir_b : SampleKind::ir_a;
    distance(ts, first, beam_low);
    distance(ts + rearm_off, first, beam_high);
    distance(ts + gap, second, beam_low);
    distance(ts + gap + rearm_off, second, beam_high);
  };

  for (const auto& p : sc.persons) {
    const Millis gap = crossing_gap_ms(p.speed_mps, sc.geometry);
    crossing(p.enter_ts, gap, /*entering=*/true);
    if (p.exit_ts) crossing(*p.exit_ts, gap, /*entering=*/false);

    for (const auto& w : p.washes) {
      const Millis presence_end = wash_presence_end(w, sc.config);
      for (Millis t = w.start_ts; t < presence_end; t += kTapSamplePeriodMs) {
        distance(t, SampleKind::ultrasonic, tap_present);
      }
      distance(presence_end, SampleKind::ultrasonic, tap_absent);
      if (w.badge_uid && presence_end - w.start_ts >= kBadgeOffsetMs) {
        out.push_back(SensorSample{w.start_ts + kBadgeOffsetMs,
                                   SampleKind::rfid, 0, *w.badge_uid});
      }
    }
  }

  std::stable_sort(out.begin(), out.end(),
                   [](const SensorSample& a, const SensorSample& b) {
                     if (a.ts != b.ts) return a.ts < b.ts;
                     return static_cast<int>(a.kind) < static_cast<int>(b.kind);
                   });
  return out;
}

}  // namespace hh
