#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hh/clock.hpp"

namespace hh {

// Doorway geometry and the walking-speed envelope used to turn two beam
// trips into a direction. A pair of trips dt apart implies a speed of
// spacing/dt; only speeds inside [v_min, v_max] are trusted.
struct DetectorConfig {
  int beam_trip_mm = 800;      // falling edge below this distance is a trip
  double beam_spacing_m = 0.30;
  double v_min_mps = 1.0;
  double v_max_mps = 3.0;
  Millis debounce_ms = 50;

  // Valid trip-pair gap in milliseconds, inclusive on both ends.
  double pair_window_lo_ms() const { return 1000.0 * beam_spacing_m / v_max_mps; }
  double pair_window_hi_ms() const { return 1000.0 * beam_spacing_m / v_min_mps; }

  std::vector<std::string> validate() const {
    std::vector<std::string> issues;
    if (beam_trip_mm <= 0) issues.push_back("beam_trip_mm must be positive");
    if (beam_spacing_m <= 0) issues.push_back("beam_spacing_m must be positive");
    if (v_min_mps <= 0) issues.push_back("v_min_mps must be positive");
    if (!(v_min_mps < v_max_mps)) {
      issues.push_back("v_min_mps must be smaller than v_max_mps");
    }
    if (debounce_ms < 0) issues.push_back("debounce_ms must be >= 0");
    if (issues.empty() && !(pair_window_lo_ms() <= pair_window_hi_ms())) {
      issues.push_back("pairing window is empty");
    }
    return issues;
  }
};

// Sensor A faces the corridor, sensor B the bed side; a person entering
// trips A first.
enum class BeamSensor { A, B };

struct BeamTrip {
  BeamSensor sensor;
  Millis ts;
};

enum class Direction { enter, exit, unknown };

inline const char* to_string(Direction d) {
  switch (d) {
    case Direction::enter: return "enter";
    case Direction::exit: return "exit";
    case Direction::unknown: return "unknown";
  }
  return "?";
}

// Classifies a trip pair by order and implied speed.
inline Direction classify(const BeamTrip& x, const BeamTrip& y,
                          const DetectorConfig& cfg) {
  if (x.sensor == y.sensor) return Direction::unknown;
  const BeamTrip& a = x.sensor == BeamSensor::A ? x : y;
  const BeamTrip& b = x.sensor == BeamSensor::B ? x : y;
  const double dt = static_cast<double>(b.ts - a.ts);
  const double lo = cfg.pair_window_lo_ms();
  const double hi = cfg.pair_window_hi_ms();
  if (dt >= lo && dt <= hi) return Direction::enter;
  if (-dt >= lo && -dt <= hi) return Direction::exit;
  return Direction::unknown;
}

// Falling-edge detector with debounce for one infrared sensor. A trip fires
// when the distance crosses below the threshold; the sensor re-arms only
// after the distance rises back above it.
class BeamEdgeFilter {
 public:
  explicit BeamEdgeFilter(int trip_mm, Millis debounce_ms)
      : trip_mm_(trip_mm), debounce_ms_(debounce_ms) {}

  std::optional<Millis> feed(int distance_mm, Millis ts) {
    bool below = distance_mm < trip_mm_;
    bool edge = below && !below_;
    below_ = below;
    if (!edge) return std::nullopt;
    if (has_last_trip_ && ts - last_trip_ts_ < debounce_ms_) return std::nullopt;
    has_last_trip_ = true;
    last_trip_ts_ = ts;
    return ts;
  }

 private:
  int trip_mm_;
  Millis debounce_ms_;
  bool below_ = false;
  bool has_last_trip_ = false;
  Millis last_trip_ts_ = 0;
};

struct DirectedEvent {
  Direction direction;
  Millis ts;  // timestamp of the second trip of the pair
};

// Greedy online pairing of trips from the two sensors. A new trip pairs
// with the nearest pending trip of the other sensor whose gap fits the
// speed window; pending trips older than the window are dropped and counted
// as unknowns. Adequate for single-file doorway traffic.
class TripPairer {
 public:
  explicit TripPairer(const DetectorConfig& cfg) : cfg_(cfg) {}

  std::vector<DirectedEvent> feed(const BeamTrip& trip) {
    std::vector<DirectedEvent> out;
    expire(trip.ts);
    int best = -1;
    for (int i = static_cast<int>(pending_.size()) - 1; i >= 0; --i) {
      if (pending_[i].sensor == trip.sensor) continue;
      Direction d = classify(pending_[i], trip, cfg_);
      if (d != Direction::unknown) {
        best = i;
        break;  // scanning newest-first: first hit is the nearest in time
      }
    }
    if (best >= 0) {
      Direction d = classify(pending_[best], trip, cfg_);
      pending_.erase(pending_.begin() + best);
      out.push_back(DirectedEvent{d, trip.ts});
    } else {
      pending_.push_back(trip);
    }
    return out;
  }

  // Drops pending trips that can no longer pair with anything at `now`.
  void expire(Millis now) {
    double hi = cfg_.pair_window_hi_ms();
    while (!pending_.empty() &&
           static_cast<double>(now - pending_.front().ts) > hi) {
      pending_.pop_front();
      ++unknown_count_;
    }
  }

  std::uint64_t unknown_count() const { return unknown_count_; }
  std::size_t pending_count() const { return pending_.size(); }

 private:
  DetectorConfig cfg_;
  std::deque<BeamTrip> pending_;
  std::uint64_t unknown_count_ = 0;
};

// Both edge filters plus the pairer: raw distance samples in, directed
// enter/exit events out.
class EntrywayDetector {
 public:
  explicit EntrywayDetector(const DetectorConfig& cfg)
      : cfg_(cfg),
        filter_a_(cfg.beam_trip_mm, cfg.debounce_ms),
        filter_b_(cfg.beam_trip_mm, cfg.debounce_ms),
        pairer_(cfg) {
    auto issues = cfg.validate();
    if (!issues.empty()) {
      std::string msg = "invalid detector config:";
      for (const auto& i : issues) msg += " [" + i + "]";
      throw std::invalid_argument(msg);
    }
  }

  std::vector<DirectedEvent> feed_sample(BeamSensor sensor, int distance_mm,
                                         Millis ts) {
    auto& filter = sensor == BeamSensor::A ? filter_a_ : filter_b_;
    auto tripped = filter.feed(distance_mm, ts);
    if (!tripped) {
      pairer_.expire(ts);
      return {};
    }
    return pairer_.feed(BeamTrip{sensor, *tripped});
  }

  // Flushes pending trips that have outlived the pairing window.
  void expire(Millis now) { pairer_.expire(now); }

  std::uint64_t unknown_count() const { return pairer_.unknown_count(); }

 private:
  DetectorConfig cfg_;
  BeamEdgeFilter filter_a_;
  BeamEdgeFilter filter_b_;
  TripPairer pairer_;
};

}  // namespace hh
