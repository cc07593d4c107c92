#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "hh/events.hpp"
#include "hh/util.hpp"

namespace hh {

// The canonical JSON record that crosses the MQTT/HTTP boundary. Key order
// is fixed and the encoder emits no extraneous whitespace, so identical
// records encode to identical bytes.
struct WireDataPoint {
  std::uint64_t seq = 0;
  std::string device_id;
  Millis ts = 0;
  EventKind event = EventKind::access;
  std::uint64_t accesses = 0;
  std::uint64_t exits = 0;
  std::uint64_t occupancy = 0;
  std::uint64_t opportunities = 0;
  std::uint64_t sanitizations = 0;
  std::optional<std::int64_t> rate_percent_x100;
  std::optional<std::string> rfid_uid;

  bool operator==(const WireDataPoint&) const = default;

  CounterState counters() const {
    CounterState c;
    c.accesses = accesses;
    c.exits = exits;
    c.occupancy = occupancy;
    c.opportunities = opportunities;
    c.sanitizations = sanitizations;
    c.overrate_flag = sanitizations > opportunities;
    return c;
  }
};

inline WireDataPoint to_wire(const DataPoint& dp) {
  WireDataPoint w;
  w.seq = dp.seq;
  w.device_id = dp.device_id;
  w.ts = dp.ts;
  w.event = dp.event;
  w.accesses = dp.counters.accesses;
  w.exits = dp.counters.exits;
  w.occupancy = dp.counters.occupancy;
  w.opportunities = dp.counters.opportunities;
  w.sanitizations = dp.counters.sanitizations;
  w.rate_percent_x100 = dp.rate.percent_x100;
  w.rfid_uid = dp.rfid_uid;
  return w;
}

inline std::string encode(const WireDataPoint& w) {
  std::string out;
  out.reserve(192);
  out += "{\"seq\":";
  out += std::to_string(w.seq);
  out += ",\"device_id\":\"";
  out += json_escape(w.device_id);
  out += "\",\"ts\":";
  out += std::to_string(w.ts);
  out += ",\"event\":\"";
  out += to_string(w.event);
  out += "\",\"accesses\":";
  out += std::to_string(w.accesses);
  out += ",\"exits\":";
  out += std::to_string(w.exits);
  out += ",\"occupancy\":";
  out += std::to_string(w.occupancy);
  out += ",\"opportunities\":";
  out += std::to_string(w.opportunities);
  out += ",\"sanitizations\":";
  out += std::to_string(w.sanitizations);
  out += ",\"rate_percent\":";
  if (w.rate_percent_x100) {
    out += format_percent_x100(*w.rate_percent_x100);
  } else {
    out += "null";
  }
  out += ",\"rfid_uid\":";
  if (w.rfid_uid) {
    out += '"';
    out += json_escape(*w.rfid_uid);
    out += '"';
  } else {
    out += "null";
  }
  out += '}';
  return out;
}

inline std::string encode(const DataPoint& dp) { return encode(to_wire(dp)); }

class DecodeError : public std::runtime_error {
 public:
  explicit DecodeError(const std::string& what) : std::runtime_error(what) {}
};

inline WireDataPoint decode(std::string_view bytes) {
  nlohmann::json j = nlohmann::json::parse(bytes, nullptr, false);
  if (j.is_discarded()) throw DecodeError("malformed JSON");
  if (!j.is_object()) throw DecodeError("top level is not an object");

  static const char* kKeys[] = {"seq",          "device_id",    "ts",
                                "event",        "accesses",     "exits",
                                "occupancy",    "opportunities", "sanitizations",
                                "rate_percent", "rfid_uid"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : kKeys) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) throw DecodeError("unknown key: " + it.key());
  }
  for (const char* k : kKeys) {
    if (!j.contains(k)) throw DecodeError(std::string("missing key: ") + k);
  }

  auto uint_field = [&](const char* key) -> std::uint64_t {
    const auto& v = j.at(key);
    if (!v.is_number_integer())
      throw DecodeError(std::string("key ") + key + " must be an integer");
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    auto s = v.get<std::int64_t>();
    if (s < 0) throw DecodeError(std::string("key ") + key + " must be >= 0");
    return static_cast<std::uint64_t>(s);
  };

  WireDataPoint w;
  w.seq = uint_field("seq");
  if (!j.at("device_id").is_string())
    throw DecodeError("key device_id must be a string");
  w.device_id = j.at("device_id").get<std::string>();
  if (!j.at("ts").is_number_integer())
    throw DecodeError("key ts must be an integer");
  w.ts = j.at("ts").get<std::int64_t>();
  if (!j.at("event").is_string())
    throw DecodeError("key event must be a string");
  auto kind = parse_event_kind(j.at("event").get<std::string>());
  if (!kind)
    throw DecodeError("key event has unknown value: " +
                      j.at("event").get<std::string>());
  w.event = *kind;
  w.accesses = uint_field("accesses");
  w.exits = uint_field("exits");
  w.occupancy = uint_field("occupancy");
  w.opportunities = uint_field("opportunities");
  w.sanitizations = uint_field("sanitizations");

  const auto& rate = j.at("rate_percent");
  if (rate.is_null()) {
    w.rate_percent_x100 = std::nullopt;
  } else if (rate.is_number()) {
    double v = rate.get<double>();
    if (v < 0) throw DecodeError("key rate_percent must be >= 0");
    w.rate_percent_x100 = static_cast<std::int64_t>(std::llround(v * 100.0));
  } else {
    throw DecodeError("key rate_percent must be a number or null");
  }

  const auto& uid = j.at("rfid_uid");
  if (uid.is_null()) {
    w.rfid_uid = std::nullopt;
  } else if (uid.is_string()) {
    w.rfid_uid = uid.get<std::string>();
  } else {
    throw DecodeError("key rfid_uid must be a string or null");
  }
  return w;
}

}  // namespace hh
