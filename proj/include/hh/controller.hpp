#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hh/config.hpp"
#include "hh/counters.hpp"
#include "hh/events.hpp"
#include "hh/util.hpp"

namespace hh {

struct StepResult {
  std::vector<ActuatorCommand> commands;
  std::vector<DataPoint> emissions;
};

class OrderingError : public std::runtime_error {
 public:
  OrderingError(Millis got, Millis last)
      : std::runtime_error("event ts " + std::to_string(got) +
                           " is older than last seen ts " +
                           std::to_string(last)) {}
};

// Closed-loop hygiene controller. A pure fold over a time-ordered event
// stream: identical (config, events) always yields identical commands and
// emissions. The controller never reads a clock; all timing arrives as
// event timestamps, and timed transitions (step boundaries, valve watchdog)
// are applied for every instant up to the incoming event's timestamp before
// the event itself is dispatched. Emissions for a timed transition carry the
// exact boundary timestamp, not the timestamp of the event that revealed it.
class Controller {
 public:
  enum class Phase { idle, prompting, washing };

  explicit Controller(ControllerConfig cfg) : cfg_(std::move(cfg)) {
    auto issues = cfg_.validate();
    if (!issues.empty()) throw ConfigError(issues);
  }

  // Commands the firmware issues right after setup: a known-safe valve
  // state and the idle banner.
  std::vector<ActuatorCommand> startup_commands() const {
    return {ValveClose{}, LcdText{"HH monitor", "ready"}};
  }

  StepResult handle(const ControllerEvent& ev) {
    const Millis ts = event_ts(ev);
    if (ts < last_ts_) throw OrderingError(ts, last_ts_);
    last_ts_ = ts;

    StepResult r;
    advance_time(ts, r);
    std::visit(
        [&](const auto& e) {
          using E = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<E, EntryDetected>) {
            on_entry(e.ts, r);
          } else if constexpr (std::is_same_v<E, ExitDetected>) {
            on_exit(e.ts, r);
          } else if constexpr (std::is_same_v<E, TapDistance>) {
            on_tap_distance(e.ts, e.mm, r);
          } else if constexpr (std::is_same_v<E, RfidRead>) {
            on_rfid(e.ts, e.uid_hex, r);
          }
          // Tick carries time only; advance_time above already did the work.
        },
        ev);
    return r;
  }

  const ControllerConfig& config() const { return cfg_; }
  const CounterState& counters() const { return counters_; }
  Phase phase() const { return phase_; }
  int washing_step() const { return phase_ == Phase::washing ? step_index_ : 0; }
  Millis wash_started_ts() const { return wash_started_ts_; }
  std::optional<Millis> last_completed_ts() const { return last_completed_ts_; }
  std::uint64_t emitted_count() const { return next_seq_ - 1; }

 private:
  void advance_time(Millis now, StepResult& r) {
    for (;;) {
      bool have_step = phase_ == Phase::washing;
      Millis step_boundary =
          have_step ? wash_started_ts_ + static_cast<Millis>(step_index_) *
                                             cfg_.step_duration_ms
                    : 0;
      bool have_valve = valve_open_;
      Millis valve_deadline =
          have_valve ? valve_opened_ts_ + cfg_.valve_max_open_ms : 0;

      if (have_step && step_boundary <= now &&
          (!have_valve || step_boundary <= valve_deadline)) {
        if (step_index_ < cfg_.step_count) {
          ++step_index_;
          r.commands.push_back(OrientationStep{step_index_});
        } else {
          complete_wash(step_boundary, r);
        }
        continue;
      }
      if (have_valve && valve_deadline <= now) {
        // Watchdog: water has been running too long; cut it without
        // touching the procedure.
        valve_open_ = false;
        r.commands.push_back(ValveClose{});
        r.emissions.push_back(snapshot(valve_deadline, EventKind::anomaly));
        continue;
      }
      break;
    }
  }

  void on_entry(Millis ts, StepResult& r) {
    counters_.accesses += 1;
    counters_.opportunities += 2;
    counters_.occupancy += 1;
    refresh_overrate();
    if (phase_ == Phase::idle) phase_ = Phase::prompting;
    r.commands.push_back(LcdText{"Wash your hands", ""});
    r.emissions.push_back(snapshot(ts, EventKind::access));
  }

  void on_exit(Millis ts, StepResult& r) {
    if (counters_.occupancy > 0) {
      counters_.exits += 1;
      counters_.occupancy -= 1;
      if (counters_.occupancy == 0 && phase_ == Phase::prompting) {
        phase_ = Phase::idle;
      }
      r.emissions.push_back(snapshot(ts, EventKind::exit));
    } else {
      // Sensor false trigger: an exit with nobody inside must not corrupt
      // the tallies.
      counters_.ignored_exits += 1;
      r.emissions.push_back(snapshot(ts, EventKind::anomaly));
    }
  }

  void on_tap_distance(Millis ts, int mm, StepResult& r) {
    bool present = present_;
    if (mm <= cfg_.tap_present_mm) {
      present = true;
    } else if (mm >= cfg_.tap_absent_mm) {
      present = false;
    }  // between the thresholds: hold previous reading
    if (present == present_) return;
    present_ = present;

    if (present_) {
      if (phase_ != Phase::washing) start_wash(ts, r);
    } else if (phase_ == Phase::washing) {
      abort_wash(ts, r);
    }
  }

  void on_rfid(Millis ts, const std::string& uid, StepResult& r) {
    if (!is_valid_rfid_uid(uid)) {
      r.emissions.push_back(snapshot(ts, EventKind::anomaly));
      return;
    }
    pending_uid_ = uid;
    pending_uid_expiry_ = ts + cfg_.rfid_pending_ms;
  }

  void start_wash(Millis ts, StepResult& r) {
    phase_ = Phase::washing;
    step_index_ = 1;
    wash_started_ts_ = ts;
    valve_open_ = true;
    valve_opened_ts_ = ts;
    r.commands.push_back(ValveOpen{});
    r.commands.push_back(OrientationStep{1});
    r.commands.push_back(LcdText{"Follow the steps", ""});
  }

  void complete_wash(Millis ts, StepResult& r) {
    counters_.sanitizations += 1;
    refresh_overrate();
    if (valve_open_) {
      valve_open_ = false;
      r.commands.push_back(ValveClose{});
    }
    r.commands.push_back(OrientationStep{0});
    r.commands.push_back(LcdText{"HH complete", ""});

    std::optional<std::string> uid;
    if (pending_uid_ && ts <= pending_uid_expiry_) uid = pending_uid_;
    pending_uid_.reset();

    r.emissions.push_back(snapshot(ts, EventKind::hh_complete, uid));
    last_completed_ts_ = ts;
    step_index_ = 0;
    phase_ = counters_.occupancy > 0 ? Phase::prompting : Phase::idle;
  }

  void abort_wash(Millis ts, StepResult& r) {
    if (phase_ != Phase::washing) return;
    valve_open_ = false;
    r.commands.push_back(ValveClose{});
    r.commands.push_back(OrientationStep{0});
    r.commands.push_back(LcdText{"HH aborted", ""});
    r.emissions.push_back(snapshot(ts, EventKind::hh_abort));
    step_index_ = 0;
    phase_ = counters_.occupancy > 0 ? Phase::prompting : Phase::idle;
  }

  DataPoint snapshot(Millis ts, EventKind kind,
                     std::optional<std::string> uid = std::nullopt) {
    DataPoint dp;
    dp.seq = next_seq_++;
    dp.device_id = cfg_.device_id;
    dp.ts = ts;
    dp.event = kind;
    dp.counters = counters_;
    dp.rate = compute_rate(counters_);
    dp.rfid_uid = std::move(uid);
    return dp;
  }

  void refresh_overrate() {
    counters_.overrate_flag =
        counters_.sanitizations > counters_.opportunities;
  }

  ControllerConfig cfg_;
  CounterState counters_;
  Phase phase_ = Phase::idle;
  int step_index_ = 0;           // 1..11 while washing
  Millis wash_started_ts_ = 0;   // exact Present-transition timestamp
  bool present_ = false;         // hysteresis presence at the tap
  bool valve_open_ = false;
  Millis valve_opened_ts_ = 0;
  std::optional<std::string> pending_uid_;
  Millis pending_uid_expiry_ = 0;
  std::optional<Millis> last_completed_ts_;
  Millis last_ts_ = 0;
  std::uint64_t next_seq_ = 1;
};

}  // namespace hh
