#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hh/config.hpp"
#include "hh/detector.hpp"
#include "hh/util.hpp"

namespace hh {

// What a person does at the tap. `complete` runs the whole procedure;
// `abort_at_step` walks away midway through the given step;
// `walk_away_at` walks away at a millisecond offset from the wash start
// (an offset past the procedure duration degenerates to a completion).
struct WashBehavior {
  enum class Kind { complete, abort_at_step, walk_away_at };
  Kind kind = Kind::complete;
  int step = 0;       // abort_at_step
  Millis at_ms = 0;   // walk_away_at

  bool operator==(const WashBehavior&) const = default;
};

struct WashScript {
  Millis start_ts = 0;  // when the person reaches the tap
  WashBehavior behavior;
  std::optional<std::string> badge_uid;

  bool operator==(const WashScript&) const = default;
};

struct PersonScript {
  std::string person_id;
  Millis enter_ts = 0;
  double speed_mps = 2.0;
  std::vector<WashScript> washes;
  std::optional<Millis> exit_ts;

  bool operator==(const PersonScript&) const = default;
};

struct Scenario {
  ControllerConfig config;
  DetectorConfig geometry;
  std::vector<PersonScript> persons;
  Millis duration_ms = 0;
  Millis epoch_base_ms = 0;  // added to emission timestamps on output

  bool operator==(const Scenario& o) const {
    return duration_ms == o.duration_ms && epoch_base_ms == o.epoch_base_ms &&
           persons == o.persons && config_equal(o) && geometry_equal(o);
  }

 private:
  bool config_equal(const Scenario& o) const {
    return config.step_duration_ms == o.config.step_duration_ms &&
           config.step_count == o.config.step_count &&
           config.tap_present_mm == o.config.tap_present_mm &&
           config.tap_absent_mm == o.config.tap_absent_mm &&
           config.rfid_pending_ms == o.config.rfid_pending_ms &&
           config.valve_max_open_ms == o.config.valve_max_open_ms &&
           config.device_id == o.config.device_id;
  }
  bool geometry_equal(const Scenario& o) const {
    return geometry.beam_trip_mm == o.geometry.beam_trip_mm &&
           geometry.beam_spacing_m == o.geometry.beam_spacing_m &&
           geometry.v_min_mps == o.geometry.v_min_mps &&
           geometry.v_max_mps == o.geometry.v_max_mps &&
           geometry.debounce_ms == o.geometry.debounce_ms;
  }
};

// Beam-to-beam gap for a person crossing at `speed` meters per second.
inline Millis crossing_gap_ms(double speed_mps, const DetectorConfig& g) {
  return static_cast<Millis>(
      std::llround(1000.0 * g.beam_spacing_m / speed_mps));
}

// True when a crossing at this speed produces a trip gap inside the
// pairing window, i.e. the detector will classify it.
inline bool crossing_detectable(double speed_mps, const DetectorConfig& g) {
  double gap = static_cast<double>(crossing_gap_ms(speed_mps, g));
  return gap >= g.pair_window_lo_ms() && gap <= g.pair_window_hi_ms();
}

// When presence at the tap ends for a given behavior.
inline Millis wash_presence_end(const WashScript& w, const ControllerConfig& c) {
  switch (w.behavior.kind) {
    case WashBehavior::Kind::complete:
      return w.start_ts + c.procedure_total_ms();
    case WashBehavior::Kind::abort_at_step:
      return w.start_ts +
             static_cast<Millis>(w.behavior.step - 1) * c.step_duration_ms +
             c.step_duration_ms / 2;
    case WashBehavior::Kind::walk_away_at:
      return w.start_ts + w.behavior.at_ms;
  }
  return w.start_ts;
}

// Whether this behavior keeps the person at the tap long enough to finish
// all steps.
inline bool wash_completes(const WashScript& w, const ControllerConfig& c) {
  return wash_presence_end(w, c) >= w.start_ts + c.procedure_total_ms();
}

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<std::string> violations)
      : std::runtime_error(join(violations)), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string msg = "invalid scenario:";
    for (const auto& s : v) msg += "\n  " + s;
    return msg;
  }
  std::vector<std::string> violations_;
};

namespace detail {

using json = nlohmann::ordered_json;

inline void check_keys(const json& obj, const std::string& path,
                       std::initializer_list<const char*> allowed,
                       std::vector<std::string>& errors) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) errors.push_back(path + ": unknown field '" + it.key() + "'");
  }
}

inline bool get_ms(const json& obj, const std::string& path, const char* key,
                   Millis& out, std::vector<std::string>& errors) {
  if (!obj.contains(key)) return false;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) {
    errors.push_back(path + "." + key + ": must be an integer");
    return false;
  }
  out = v.get<std::int64_t>();
  return true;
}

inline bool get_int(const json& obj, const std::string& path, const char* key,
                    int& out, std::vector<std::string>& errors) {
  if (!obj.contains(key)) return false;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) {
    errors.push_back(path + "." + key + ": must be an integer");
    return false;
  }
  out = v.get<int>();
  return true;
}

inline bool get_double(const json& obj, const std::string& path, const char* key,
                       double& out, std::vector<std::string>& errors) {
  if (!obj.contains(key)) return false;
  const auto& v = obj.at(key);
  if (!v.is_number()) {
    errors.push_back(path + "." + key + ": must be a number");
    return false;
  }
  out = v.get<double>();
  return true;
}

inline bool get_string(const json& obj, const std::string& path, const char* key,
                       std::string& out, std::vector<std::string>& errors) {
  if (!obj.contains(key)) return false;
  const auto& v = obj.at(key);
  if (!v.is_string()) {
    errors.push_back(path + "." + key + ": must be a string");
    return false;
  }
  out = v.get<std::string>();
  return true;
}

inline WashBehavior parse_behavior(const json& v, const std::string& path,
                                   std::vector<std::string>& errors) {
  WashBehavior b;
  if (v.is_string()) {
    if (v.get<std::string>() == "complete") {
      b.kind = WashBehavior::Kind::complete;
    } else {
      errors.push_back(path + ": unknown behavior '" + v.get<std::string>() +
                       "' (expected \"complete\" or an object)");
    }
    return b;
  }
  if (!v.is_object() || v.size() != 1) {
    errors.push_back(path +
                     ": must be \"complete\", {\"abort_at_step\": n} or "
                     "{\"walk_away_at\": ms}");
    return b;
  }
  if (v.contains("abort_at_step")) {
    b.kind = WashBehavior::Kind::abort_at_step;
    if (!v.at("abort_at_step").is_number_integer()) {
      errors.push_back(path + ".abort_at_step: must be an integer");
      return b;
    }
    b.step = v.at("abort_at_step").get<int>();
    if (b.step < 1 || b.step > kStepCount) {
      errors.push_back(path + ".abort_at_step: must be in [1, " +
                       std::to_string(kStepCount) + "]");
    }
  } else if (v.contains("walk_away_at")) {
    b.kind = WashBehavior::Kind::walk_away_at;
    if (!v.at("walk_away_at").is_number_integer()) {
      errors.push_back(path + ".walk_away_at: must be an integer");
      return b;
    }
    b.at_ms = v.at("walk_away_at").get<std::int64_t>();
    if (b.at_ms < 1) {
      errors.push_back(path + ".walk_away_at: must be >= 1 ms");
    }
  } else {
    errors.push_back(path + ": unknown behavior object");
  }
  return b;
}

}  // namespace detail

inline std::vector<std::string> validate_scenario(const Scenario& sc);

inline Scenario load_scenario(const std::string& text) {
  using detail::json;
  std::vector<std::string> errors;
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ScenarioError({"malformed JSON"});
  if (!j.is_object()) throw ScenarioError({"top level must be an object"});

  detail::check_keys(j, "$",
                     {"config", "geometry", "duration_ms", "epoch_base_ms",
                      "persons"},
                     errors);

  Scenario sc;
  if (j.contains("config")) {
    const auto& c = j.at("config");
    if (!c.is_object()) {
      errors.push_back("config: must be an object");
    } else {
      detail::check_keys(c, "config",
                         {"step_duration_ms", "step_count", "tap_present_mm",
                          "tap_absent_mm", "rfid_pending_ms",
                          "valve_max_open_ms", "device_id"},
                         errors);
      detail::get_ms(c, "config", "step_duration_ms", sc.config.step_duration_ms, errors);
      detail::get_int(c, "config", "step_count", sc.config.step_count, errors);
      detail::get_int(c, "config", "tap_present_mm", sc.config.tap_present_mm, errors);
      detail::get_int(c, "config", "tap_absent_mm", sc.config.tap_absent_mm, errors);
      detail::get_ms(c, "config", "rfid_pending_ms", sc.config.rfid_pending_ms, errors);
      detail::get_ms(c, "config", "valve_max_open_ms", sc.config.valve_max_open_ms, errors);
      detail::get_string(c, "config", "device_id", sc.config.device_id, errors);
    }
  }
  if (j.contains("geometry")) {
    const auto& g = j.at("geometry");
    if (!g.is_object()) {
      errors.push_back("geometry: must be an object");
    } else {
      detail::check_keys(g, "geometry",
                         {"beam_trip_mm", "beam_spacing_m", "v_min_mps",
                          "v_max_mps", "debounce_ms"},
                         errors);
      detail::get_int(g, "geometry", "beam_trip_mm", sc.geometry.beam_trip_mm, errors);
      detail::get_double(g, "geometry", "beam_spacing_m", sc.geometry.beam_spacing_m, errors);
      detail::get_double(g, "geometry", "v_min_mps", sc.geometry.v_min_mps, errors);
      detail::get_double(g, "geometry", "v_max_mps", sc.geometry.v_max_mps, errors);
      detail::get_ms(g, "geometry", "debounce_ms", sc.geometry.debounce_ms, errors);
    }
  }
  if (!detail::get_ms(j, "$", "duration_ms", sc.duration_ms, errors) &&
      !j.contains("duration_ms")) {
    errors.push_back("$.duration_ms: required");
  }
  detail::get_ms(j, "$", "epoch_base_ms", sc.epoch_base_ms, errors);

  if (j.contains("persons")) {
    const auto& ps = j.at("persons");
    if (!ps.is_array()) {
      errors.push_back("persons: must be an array");
    } else {
      for (std::size_t i = 0; i < ps.size(); ++i) {
        std::string path = "persons[" + std::to_string(i) + "]";
        const auto& p = ps[i];
        if (!p.is_object()) {
          errors.push_back(path + ": must be an object");
          continue;
        }
        detail::check_keys(p, path,
                           {"person_id", "enter_ts", "speed_mps", "washes",
                            "exit_ts"},
                           errors);
        PersonScript person;
        person.person_id = "p" + std::to_string(i + 1);
        detail::get_string(p, path, "person_id", person.person_id, errors);
        if (!p.contains("enter_ts")) errors.push_back(path + ".enter_ts: required");
        detail::get_ms(p, path, "enter_ts", person.enter_ts, errors);
        detail::get_double(p, path, "speed_mps", person.speed_mps, errors);
        if (p.contains("exit_ts")) {
          Millis ts = 0;
          if (detail::get_ms(p, path, "exit_ts", ts, errors)) person.exit_ts = ts;
        }
        if (p.contains("washes")) {
          const auto& ws = p.at("washes");
          if (!ws.is_array()) {
            errors.push_back(path + ".washes: must be an array");
          } else {
            for (std::size_t k = 0; k < ws.size(); ++k) {
              std::string wpath = path + ".washes[" + std::to_string(k) + "]";
              const auto& w = ws[k];
              if (!w.is_object()) {
                errors.push_back(wpath + ": must be an object");
                continue;
              }
              detail::check_keys(w, wpath, {"start_ts", "behavior", "badge_uid"},
                                 errors);
              WashScript wash;
              if (!w.contains("start_ts")) errors.push_back(wpath + ".start_ts: required");
              detail::get_ms(w, wpath, "start_ts", wash.start_ts, errors);
              if (w.contains("behavior")) {
                wash.behavior =
                    detail::parse_behavior(w.at("behavior"), wpath + ".behavior", errors);
              }
              if (w.contains("badge_uid")) {
                std::string uid;
                if (detail::get_string(w, wpath, "badge_uid", uid, errors)) {
                  if (!is_valid_rfid_uid(uid)) {
                    errors.push_back(wpath +
                                     ".badge_uid: must be 8 or 14 uppercase hex chars");
                  }
                  wash.badge_uid = uid;
                }
              }
              person.washes.push_back(std::move(wash));
            }
          }
        }
        sc.persons.push_back(std::move(person));
      }
    }
  }

  auto semantic = validate_scenario(sc);
  errors.insert(errors.end(), semantic.begin(), semantic.end());
  if (!errors.empty()) throw ScenarioError(std::move(errors));
  return sc;
}

inline std::string save_scenario(const Scenario& sc) {
  using detail::json;
  json j;
  j["config"] = {{"step_duration_ms", sc.config.step_duration_ms},
                 {"step_count", sc.config.step_count},
                 {"tap_present_mm", sc.config.tap_present_mm},
                 {"tap_absent_mm", sc.config.tap_absent_mm},
                 {"rfid_pending_ms", sc.config.rfid_pending_ms},
                 {"valve_max_open_ms", sc.config.valve_max_open_ms},
                 {"device_id", sc.config.device_id}};
  j["geometry"] = {{"beam_trip_mm", sc.geometry.beam_trip_mm},
                   {"beam_spacing_m", sc.geometry.beam_spacing_m},
                   {"v_min_mps", sc.geometry.v_min_mps},
                   {"v_max_mps", sc.geometry.v_max_mps},
                   {"debounce_ms", sc.geometry.debounce_ms}};
  j["duration_ms"] = sc.duration_ms;
  j["epoch_base_ms"] = sc.epoch_base_ms;
  j["persons"] = json::array();
  for (const auto& p : sc.persons) {
    json jp;
    jp["person_id"] = p.person_id;
    jp["enter_ts"] = p.enter_ts;
    jp["speed_mps"] = p.speed_mps;
    jp["washes"] = json::array();
    for (const auto& w : p.washes) {
      json jw;
      jw["start_ts"] = w.start_ts;
      switch (w.behavior.kind) {
        case WashBehavior::Kind::complete:
          jw["behavior"] = "complete";
          break;
        case WashBehavior::Kind::abort_at_step:
          jw["behavior"] = {{"abort_at_step", w.behavior.step}};
          break;
        case WashBehavior::Kind::walk_away_at:
          jw["behavior"] = {{"walk_away_at", w.behavior.at_ms}};
          break;
      }
      if (w.badge_uid) jw["badge_uid"] = *w.badge_uid;
      jp["washes"].push_back(std::move(jw));
    }
    if (p.exit_ts) jp["exit_ts"] = *p.exit_ts;
    j["persons"].push_back(std::move(jp));
  }
  return j.dump(2) + "\n";
}

// Semantic validation: geometry/config invariants, per-person timing, and
// the single-file traffic rules the detector and oracle rely on.
inline std::vector<std::string> validate_scenario(const Scenario& sc) {
  std::vector<std::string> errors;
  for (const auto& e : sc.config.validate()) errors.push_back("config: " + e);
  for (const auto& e : sc.geometry.validate()) errors.push_back("geometry: " + e);
  if (sc.duration_ms <= 0) errors.push_back("$.duration_ms: must be positive");
  if (!errors.empty()) return errors;  // later checks need sane configs

  struct Crossing {
    Millis start;
    Millis gap;
    std::string path;
  };
  struct WashSpan {
    Millis start;
    Millis end;
    std::string path;
  };
  std::vector<Crossing> crossings;
  std::vector<WashSpan> spans;

  const Millis total = sc.config.procedure_total_ms();
  for (std::size_t i = 0; i < sc.persons.size(); ++i) {
    const auto& p = sc.persons[i];
    std::string path = "persons[" + std::to_string(i) + "]";
    if (p.person_id.empty()) errors.push_back(path + ".person_id: must not be empty");
    if (p.speed_mps <= 0 || p.speed_mps > 10.0) {
      errors.push_back(path + ".speed_mps: must be in (0, 10]");
    }
    if (p.enter_ts < 0) errors.push_back(path + ".enter_ts: must be >= 0");
    Millis gap = p.speed_mps > 0 ? crossing_gap_ms(p.speed_mps, sc.geometry) : 0;
    if (p.enter_ts + gap > sc.duration_ms) {
      errors.push_back(path + ".enter_ts: crossing does not fit in duration_ms");
    }
    crossings.push_back({p.enter_ts, gap, path + ".enter_ts"});
    if (p.exit_ts) {
      if (*p.exit_ts <= p.enter_ts + gap) {
        errors.push_back(path + ".exit_ts: must come after the entry crossing");
      }
      if (*p.exit_ts + gap > sc.duration_ms) {
        errors.push_back(path + ".exit_ts: crossing does not fit in duration_ms");
      }
      crossings.push_back({*p.exit_ts, gap, path + ".exit_ts"});
    }
    Millis prev_end = p.enter_ts + gap;
    for (std::size_t k = 0; k < p.washes.size(); ++k) {
      const auto& w = p.washes[k];
      std::string wpath = path + ".washes[" + std::to_string(k) + "]";
      if (w.start_ts < p.enter_ts + gap) {
        errors.push_back(wpath + ".start_ts: wash starts before the person is inside");
      }
      // End of tap occupancy: a walk-away offset may extend past the
      // procedure itself.
      Millis end = std::max(w.start_ts + total, wash_presence_end(w, sc.config));
      if (w.start_ts < prev_end) {
        errors.push_back(wpath + ".start_ts: overlaps this person's previous wash");
      }
      prev_end = end + 500;
      if (end + 500 > sc.duration_ms) {
        errors.push_back(wpath + ": wash does not fit in duration_ms");
      }
      if (p.exit_ts && end + 500 > *p.exit_ts) {
        errors.push_back(wpath + ": wash must end before this person's exit_ts");
      }
      spans.push_back({w.start_ts, end, wpath});
    }
  }

  // Single-file doorway: crossings must not contend for the beams.
  std::sort(crossings.begin(), crossings.end(),
            [](const Crossing& a, const Crossing& b) { return a.start < b.start; });
  const Millis separation =
      static_cast<Millis>(sc.geometry.pair_window_hi_ms()) +
      sc.geometry.debounce_ms + 10;
  for (std::size_t i = 1; i < crossings.size(); ++i) {
    const auto& prev = crossings[i - 1];
    const auto& cur = crossings[i];
    if (cur.start < prev.start + prev.gap + separation) {
      errors.push_back(cur.path + ": crossing too close to " + prev.path +
                       " (single-file traffic required)");
    }
  }

  // One tap: washes must not overlap across persons.
  std::sort(spans.begin(), spans.end(),
            [](const WashSpan& a, const WashSpan& b) { return a.start < b.start; });
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].start < spans[i - 1].end + 500) {
      errors.push_back(spans[i].path + ": tap busy, overlaps " + spans[i - 1].path);
    }
  }
  return errors;
}

}  // namespace hh
