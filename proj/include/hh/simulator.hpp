#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hh/controller.hpp"
#include "hh/detector.hpp"
#include "hh/scenario.hpp"
#include "hh/trace.hpp"

namespace hh {

struct SimResult {
  std::vector<DataPoint> emissions;       // timestamps shifted to epoch base
  std::vector<ActuatorCommand> commands;  // controller output, in order
  CounterState final_counters;
  std::uint64_t unknown_crossings = 0;
};

template <typename Absorb>
inline void dispatch_sample(Controller& ctrl, EntrywayDetector& det,
                            const SensorSample& s, Absorb&& absorb) {
  switch (s.kind) {
    case SampleKind::ir_a:
    case SampleKind::ir_b: {
      auto events = det.feed_sample(
          s.kind == SampleKind::ir_a ? BeamSensor::A : BeamSensor::B, s.mm,
          s.ts);
      for (const auto& ev : events) {
        if (ev.direction == Direction::enter) {
          absorb(ctrl.handle(EntryDetected{ev.ts}));
        } else if (ev.direction == Direction::exit) {
          absorb(ctrl.handle(ExitDetected{ev.ts}));
        }
      }
      break;
    }
    case SampleKind::ultrasonic:
      absorb(ctrl.handle(TapDistance{s.ts, s.mm}));
      break;
    case SampleKind::rfid:
      absorb(ctrl.handle(RfidRead{s.ts, s.uid}));
      break;
  }
}

// Feeds the generated sensor trace through the detector into the
// controller, with a tick stream providing the time base. Wall-clock
// independent and reproducible from (scenario, seed).
inline SimResult run(const Scenario& sc, std::uint64_t seed) {
  auto issues = validate_scenario(sc);
  if (!issues.empty()) throw ScenarioError(issues);

  const auto trace = generate_trace(sc, seed);
  Controller ctrl(sc.config);
  EntrywayDetector det(sc.geometry);

  SimResult result;
  result.commands = ctrl.startup_commands();

  auto absorb = [&](StepResult&& r) {
    for (auto& c : r.commands) result.commands.push_back(std::move(c));
    for (auto& e : r.emissions) result.emissions.push_back(std::move(e));
  };

  std::size_t i = 0;
  for (Millis tick = 0; tick <= sc.duration_ms; tick += kTapSamplePeriodMs) {
    while (i < trace.size() && trace[i].ts <= tick) {
      dispatch_sample(ctrl, det, trace[i++], absorb);
    }
    absorb(ctrl.handle(Tick{tick}));
  }
  while (i < trace.size()) dispatch_sample(ctrl, det, trace[i++], absorb);

  det.expire(sc.duration_ms + 1);
  result.final_counters = ctrl.counters();
  result.unknown_crossings = det.unknown_count();
  for (auto& dp : result.emissions) dp.ts += sc.epoch_base_ms;
  return result;
}

// Expected counters computed straight from the script, bypassing the
// sensor synthesis and the state machine. Ground truth for tests:
// an access is an entry crossing whose speed the detector can classify,
// opportunities are two per access, and a sanitization is any wash whose
// behavior keeps the person at the tap through all steps.
inline CounterState oracle_counters(const Scenario& sc) {
  struct Crossing {
    Millis ts;
    bool entry;
  };
  std::vector<Crossing> crossings;
  CounterState c;
  for (const auto& p : sc.persons) {
    for (const auto& w : p.washes) {
      if (wash_completes(w, sc.config)) c.sanitizations += 1;
    }
    if (!crossing_detectable(p.speed_mps, sc.geometry)) continue;
    const Millis gap = crossing_gap_ms(p.speed_mps, sc.geometry);
    crossings.push_back({p.enter_ts + gap, true});
    if (p.exit_ts) crossings.push_back({*p.exit_ts + gap, false});
  }
  std::sort(crossings.begin(), crossings.end(),
            [](const Crossing& a, const Crossing& b) { return a.ts < b.ts; });
  for (const auto& cr : crossings) {
    if (cr.entry) {
      c.accesses += 1;
      c.opportunities += 2;
      c.occupancy += 1;
    } else if (c.occupancy > 0) {
      c.exits += 1;
      c.occupancy -= 1;
    } else {
      c.ignored_exits += 1;
    }
  }
  c.overrate_flag = c.sanitizations > c.opportunities;
  return c;
}

// Expected badge attachment for each completed wash, in completion order:
// a pending badge binds to the next completion inside the pending window
// and survives aborted washes in between.
inline std::vector<std::optional<std::string>> oracle_complete_uids(
    const Scenario& sc) {
  struct Wash {
    Millis start;
    bool completes;
    std::optional<std::string> badge;
    Millis presence_end;
  };
  std::vector<Wash> washes;
  for (const auto& p : sc.persons) {
    for (const auto& w : p.washes) {
      washes.push_back({w.start_ts, wash_completes(w, sc.config), w.badge_uid,
                        wash_presence_end(w, sc.config)});
    }
  }
  std::sort(washes.begin(), washes.end(),
            [](const Wash& a, const Wash& b) { return a.start < b.start; });

  std::vector<std::optional<std::string>> out;
  std::optional<std::string> pending;
  Millis pending_ts = 0;
  for (const auto& w : washes) {
    if (w.badge && w.presence_end - w.start >= kBadgeOffsetMs) {
      pending = w.badge;
      pending_ts = w.start + kBadgeOffsetMs;
    }
    if (w.completes) {
      Millis completion = w.start + sc.config.procedure_total_ms();
      if (pending && completion <= pending_ts + sc.config.rfid_pending_ms) {
        out.push_back(pending);
      } else {
        out.push_back(std::nullopt);
      }
      pending.reset();
    }
  }
  return out;
}

}  // namespace hh
