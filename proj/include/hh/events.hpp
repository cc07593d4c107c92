#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "hh/clock.hpp"
#include "hh/counters.hpp"

namespace hh {

// ---- controller inputs ------------------------------------------------

struct EntryDetected {
  Millis ts;
};
struct ExitDetected {
  Millis ts;
};
struct TapDistance {
  Millis ts;
  int mm;
};
struct RfidRead {
  Millis ts;
  std::string uid_hex;
};
struct Tick {
  Millis ts;
};

using ControllerEvent =
    std::variant<EntryDetected, ExitDetected, TapDistance, RfidRead, Tick>;

inline Millis event_ts(const ControllerEvent& ev) {
  return std::visit([](const auto& e) { return e.ts; }, ev);
}

// ---- controller outputs -----------------------------------------------

struct ValveOpen {
  bool operator==(const ValveOpen&) const = default;
};
struct ValveClose {
  bool operator==(const ValveClose&) const = default;
};
struct LcdText {
  std::string line1;  // <= 16 chars, 16x2 module
  std::string line2;
  bool operator==(const LcdText&) const = default;
};
// index 1..11 lights that hygiene step; 0 turns the panel off.
struct OrientationStep {
  int index = 0;
  bool operator==(const OrientationStep&) const = default;
};

using ActuatorCommand =
    std::variant<ValveOpen, ValveClose, LcdText, OrientationStep>;

inline std::string to_string(const ActuatorCommand& cmd) {
  struct V {
    std::string operator()(const ValveOpen&) { return "valve_open"; }
    std::string operator()(const ValveClose&) { return "valve_close"; }
    std::string operator()(const LcdText& t) {
      return "lcd[" + t.line1 + "|" + t.line2 + "]";
    }
    std::string operator()(const OrientationStep& s) {
      return s.index == 0 ? std::string("orientation_off")
                          : "orientation_step(" + std::to_string(s.index) + ")";
    }
  };
  return std::visit(V{}, cmd);
}

// ---- data points -------------------------------------------------------

enum class EventKind { access, exit, hh_complete, hh_abort, anomaly };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::access: return "access";
    case EventKind::exit: return "exit";
    case EventKind::hh_complete: return "hh_complete";
    case EventKind::hh_abort: return "hh_abort";
    case EventKind::anomaly: return "anomaly";
  }
  return "?";
}

inline std::optional<EventKind> parse_event_kind(const std::string& s) {
  if (s == "access") return EventKind::access;
  if (s == "exit") return EventKind::exit;
  if (s == "hh_complete") return EventKind::hh_complete;
  if (s == "hh_abort") return EventKind::hh_abort;
  if (s == "anomaly") return EventKind::anomaly;
  return std::nullopt;
}

// One telemetry record: a full counter snapshot taken whenever something
// countable happens. The unit of persistence, transport and aggregation.
struct DataPoint {
  std::uint64_t seq = 0;  // strictly increasing, gapless per controller run
  std::string device_id;
  Millis ts = 0;
  EventKind event = EventKind::access;
  CounterState counters;
  HygieneRate rate;
  std::optional<std::string> rfid_uid;

  bool operator==(const DataPoint&) const = default;
};

}  // namespace hh
