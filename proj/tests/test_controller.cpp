#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "hh/controller.hpp"
#include "hh/util.hpp"
#include "hh/wire.hpp"

using namespace hh;

namespace {

// Collects everything the controller produces over a run.
struct Harness {
  Controller ctrl;
  std::vector<ActuatorCommand> commands;
  std::vector<DataPoint> emissions;

  explicit Harness(ControllerConfig cfg = {}) : ctrl(std::move(cfg)) {}

  StepResult feed(const ControllerEvent& ev) {
    StepResult r = ctrl.handle(ev);
    commands.insert(commands.end(), r.commands.begin(), r.commands.end());
    emissions.insert(emissions.end(), r.emissions.begin(), r.emissions.end());
    return r;
  }

  const DataPoint& last() const { return emissions.back(); }
};

bool has_command(const std::vector<ActuatorCommand>& cmds,
                 const ActuatorCommand& want) {
  for (const auto& c : cmds) {
    if (to_string(c) == to_string(want)) return true;
  }
  return false;
}

std::vector<int> orientation_indices(const std::vector<ActuatorCommand>& cmds) {
  std::vector<int> out;
  for (const auto& c : cmds) {
    if (const auto* o = std::get_if<OrientationStep>(&c)) out.push_back(o->index);
  }
  return out;
}

// Runs one full wash starting at `t` (tap approach) with ticks every 250 ms
// until completion; returns the time just after the person left the tap.
Millis run_full_wash(Harness& h, Millis t) {
  const Millis total = h.ctrl.config().procedure_total_ms();
  h.feed(TapDistance{t, 300});
  for (Millis x = t; x <= t + total; x += 250) h.feed(Tick{x});
  h.feed(Tick{t + total + 250});
  h.feed(TapDistance{t + total + 250, 600});
  return t + total + 500;
}

}  // namespace

TEST_CASE("init: default config fits the duration band") {
  ControllerConfig cfg;
  CHECK(cfg.procedure_total_ms() == 11 * 5000);
  CHECK(cfg.procedure_total_ms() >= 40000);
  CHECK(cfg.procedure_total_ms() <= 60000);
  Controller ctrl(cfg);
  CHECK(ctrl.counters() == CounterState{});
  CHECK(ctrl.phase() == Controller::Phase::idle);
  auto cmds = ctrl.startup_commands();
  CHECK(has_command(cmds, ValveClose{}));
  CHECK(has_command(cmds, LcdText{"HH monitor", "ready"}));
}

TEST_CASE("init: durations outside the band are rejected") {
  ControllerConfig cfg;
  cfg.step_duration_ms = 3000;  // 33 s total
  CHECK_THROWS_MATCHES(Controller(cfg), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("40000")));

  // Boundary arithmetic, checked by independent multiplication.
  cfg.step_duration_ms = 5455;
  REQUIRE(11 * 5455 == 60005);
  CHECK_THROWS_AS(Controller(cfg), ConfigError);
  cfg.step_duration_ms = 5454;
  REQUIRE(11 * 5454 == 59994);
  CHECK_NOTHROW(Controller(cfg));
  cfg.step_duration_ms = 3637;
  REQUIRE(11 * 3637 == 40007);
  CHECK_NOTHROW(Controller(cfg));
  cfg.step_duration_ms = 3636;
  REQUIRE(11 * 3636 == 39996);
  CHECK_THROWS_AS(Controller(cfg), ConfigError);
}

TEST_CASE("init: inverted hysteresis is rejected by name") {
  ControllerConfig cfg;
  cfg.tap_present_mm = 500;
  cfg.tap_absent_mm = 400;
  CHECK_THROWS_MATCHES(Controller(cfg), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("tap_absent_mm")));
}

TEST_CASE("first entry produces the first published row") {
  Harness h;
  h.feed(EntryDetected{1000});
  REQUIRE(h.emissions.size() == 1);
  const auto& dp = h.last();
  CHECK(dp.seq == 1);
  CHECK(dp.event == EventKind::access);
  CHECK(dp.counters.accesses == 1);
  CHECK(dp.counters.opportunities == 2);
  CHECK(dp.counters.occupancy == 1);
  CHECK(h.ctrl.phase() == Controller::Phase::prompting);
  CHECK(has_command(h.commands, LcdText{"Wash your hands", ""}));
}

TEST_CASE("tick in idle is a no-op") {
  Harness h;
  auto r = h.feed(Tick{500});
  CHECK(r.commands.empty());
  CHECK(r.emissions.empty());
}

TEST_CASE("out-of-order events are rejected and change nothing") {
  Harness h;
  h.feed(EntryDetected{1000});
  auto before = h.ctrl.counters();
  CHECK_THROWS_AS(h.ctrl.handle(EntryDetected{999}), OrderingError);
  CHECK(h.ctrl.counters() == before);
  CHECK_NOTHROW(h.ctrl.handle(Tick{1000}));  // equal ts is fine
}

TEST_CASE("entries accumulate two opportunities each") {
  Harness h;
  Millis t = 0;
  for (int k = 1; k <= 100; ++k) {
    h.feed(EntryDetected{t += 500});
    CHECK(h.ctrl.counters().opportunities == 2ULL * k);
    CHECK(h.ctrl.counters().occupancy == static_cast<std::uint64_t>(k));
  }
}

TEST_CASE("nine entries five exits lands on the final published row") {
  Harness h;
  Millis t = 0;
  for (int i = 0; i < 9; ++i) h.feed(EntryDetected{t += 500});
  for (int i = 0; i < 5; ++i) h.feed(ExitDetected{t += 500});
  CHECK(h.ctrl.counters().opportunities == 18);
  CHECK(h.ctrl.counters().accesses == 9);
  CHECK(h.ctrl.counters().exits == 5);
  CHECK(h.ctrl.counters().occupancy == 4);
}

TEST_CASE("exit decrements occupancy but not opportunities") {
  Harness h;
  Millis t = 0;
  for (int i = 0; i < 8; ++i) h.feed(EntryDetected{t += 500});
  for (int i = 0; i < 4; ++i) h.feed(ExitDetected{t += 500});
  REQUIRE(h.ctrl.counters().exits == 4);
  h.feed(ExitDetected{t += 500});
  CHECK(h.last().event == EventKind::exit);
  CHECK(h.ctrl.counters().exits == 5);
  CHECK(h.ctrl.counters().occupancy == 3);
  CHECK(h.ctrl.counters().opportunities == 16);
}

TEST_CASE("exit at zero occupancy is an anomaly, not a counter change") {
  Harness h;
  h.feed(ExitDetected{100});
  const auto& c = h.ctrl.counters();
  CHECK(c.ignored_exits == 1);
  CHECK(c.accesses == 0);
  CHECK(c.exits == 0);
  CHECK(c.opportunities == 0);
  CHECK(c.occupancy == 0);
  CHECK(h.last().event == EventKind::anomaly);
}

TEST_CASE("occupancy equals accesses minus exits plus ignored exits") {
  SplitMix64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    Harness h;
    Millis t = 0;
    std::uint64_t entries = 0, exits = 0;
    for (int i = 0; i < 50; ++i) {
      t += 100;
      if (rng.next() % 2 == 0) {
        h.feed(EntryDetected{t});
        ++entries;
      } else {
        h.feed(ExitDetected{t});
        ++exits;
      }
      const auto& c = h.ctrl.counters();
      CHECK(c.accesses == entries);
      CHECK(c.exits + c.ignored_exits == exits);
      CHECK(c.occupancy == c.accesses - c.exits);
      CHECK(c.opportunities == 2 * c.accesses);
    }
  }
}

TEST_CASE("tap approach in prompting starts the procedure") {
  Harness h;
  h.feed(EntryDetected{1000});
  auto r = h.feed(TapDistance{2000, 300});
  CHECK(h.ctrl.phase() == Controller::Phase::washing);
  CHECK(h.ctrl.washing_step() == 1);
  CHECK(has_command(r.commands, ValveOpen{}));
  CHECK(has_command(r.commands, OrientationStep{1}));
}

TEST_CASE("dead band readings keep the current presence") {
  Harness h;
  h.feed(EntryDetected{1000});
  h.feed(TapDistance{2000, 300});
  REQUIRE(h.ctrl.phase() == Controller::Phase::washing);
  auto r = h.feed(TapDistance{2500, 450});  // between 400 and 500
  CHECK(r.commands.empty());
  CHECK(h.ctrl.phase() == Controller::Phase::washing);
}

TEST_CASE("walking away mid-wash aborts without validating") {
  Harness h;
  h.feed(EntryDetected{1000});
  h.feed(TapDistance{2000, 300});
  auto r = h.feed(TapDistance{9000, 600});
  CHECK(h.ctrl.phase() == Controller::Phase::prompting);
  CHECK(h.ctrl.counters().sanitizations == 0);
  CHECK(has_command(r.commands, ValveClose{}));
  CHECK(has_command(r.commands, OrientationStep{0}));
  REQUIRE(r.emissions.size() == 1);
  CHECK(r.emissions[0].event == EventKind::hh_abort);
}

TEST_CASE("completion lands exactly at start plus eleven steps") {
  Harness h;
  h.feed(EntryDetected{1000});
  const Millis start = 2000;
  run_full_wash(h, start);
  REQUIRE(h.emissions.size() == 2);
  const auto& done = h.last();
  CHECK(done.event == EventKind::hh_complete);
  CHECK(done.ts == start + 55000);
  CHECK(done.counters.sanitizations == 1);
  auto steps = orientation_indices(h.commands);
  REQUIRE(steps.size() == 12);  // 1..11 then off
  for (int i = 0; i < 11; ++i) CHECK(steps[i] == i + 1);
  CHECK(steps[11] == 0);
}

TEST_CASE("completion timing is exact even with sparse ticks") {
  Harness h;
  h.feed(EntryDetected{0});
  h.feed(TapDistance{100, 300});
  // Next event far past the end of the procedure.
  auto r = h.feed(Tick{100 + 55000 + 7777});
  bool found = false;
  for (const auto& dp : r.emissions) {
    if (dp.event == EventKind::hh_complete) {
      found = true;
      CHECK(dp.ts == 100 + 55000);
    }
  }
  CHECK(found);
  auto steps = orientation_indices(r.commands);
  REQUIRE(steps.size() == 11);  // 2..11 then off
  for (int i = 0; i < 10; ++i) CHECK(steps[i] == i + 2);
}

TEST_CASE("two completed washes after one access reach 100 percent") {
  Harness h;
  h.feed(EntryDetected{500});
  Millis t = run_full_wash(h, 1000);
  run_full_wash(h, t + 1000);
  const auto& c = h.ctrl.counters();
  CHECK(c.sanitizations == 2);
  CHECK(c.opportunities == 2);
  CHECK(h.last().rate.percent_x100 == 10000);
  CHECK_FALSE(c.overrate_flag);  // NS == NO is not over
}

TEST_CASE("more washes than opportunities sets the overrate flag") {
  Harness h;
  h.feed(EntryDetected{500});
  Millis t = run_full_wash(h, 1000);
  t = run_full_wash(h, t + 1000);
  run_full_wash(h, t + 1000);
  const auto& c = h.ctrl.counters();
  CHECK(c.sanitizations == 3);
  CHECK(c.opportunities == 2);
  CHECK(c.overrate_flag);
  CHECK(h.last().rate.percent_x100 == 15000);
}

TEST_CASE("tick before a step boundary does nothing") {
  Harness h;
  h.feed(EntryDetected{0});
  h.feed(TapDistance{1000, 300});
  auto r = h.feed(Tick{1000 + 4999});
  CHECK(r.commands.empty());
  CHECK(h.ctrl.washing_step() == 1);
  r = h.feed(Tick{1000 + 5000});
  CHECK(h.ctrl.washing_step() == 2);
  CHECK(has_command(r.commands, OrientationStep{2}));
}

TEST_CASE("badge during washing is attached to the completion") {
  Harness h;
  h.feed(EntryDetected{0});
  h.feed(TapDistance{1000, 300});
  h.feed(RfidRead{2000, "04A1B2C3"});
  for (Millis x = 2000; x <= 1000 + 55000; x += 250) h.feed(Tick{x});
  const auto& done = h.last();
  REQUIRE(done.event == EventKind::hh_complete);
  CHECK(done.rfid_uid == "04A1B2C3");
}

TEST_CASE("no badge means no uid on the completion") {
  Harness h;
  h.feed(EntryDetected{0});
  run_full_wash(h, 1000);
  REQUIRE(h.last().event == EventKind::hh_complete);
  CHECK_FALSE(h.last().rfid_uid.has_value());
}

TEST_CASE("badge expires after the pending window") {
  Harness h;
  h.feed(EntryDetected{0});
  h.feed(RfidRead{1000, "04A1B2C3"});
  // 61 s of idling, then a full wash: completion is far past expiry.
  run_full_wash(h, 62000);
  REQUIRE(h.last().event == EventKind::hh_complete);
  CHECK_FALSE(h.last().rfid_uid.has_value());
}

TEST_CASE("badge attaches when completion is inside the window") {
  Harness h;
  h.feed(EntryDetected{0});
  h.feed(RfidRead{1000, "04A1B2C3DEADBE"});  // 7-byte uid
  run_full_wash(h, 2000);  // completes at 57000, expiry 61000
  REQUIRE(h.last().event == EventKind::hh_complete);
  CHECK(h.last().rfid_uid == "04A1B2C3DEADBE");
}

TEST_CASE("malformed badge is an anomaly and leaves pending alone") {
  Harness h;
  h.feed(EntryDetected{0});
  h.feed(RfidRead{500, "04A1B2C3"});
  auto r = h.feed(RfidRead{600, "not-hex!"});
  REQUIRE(r.emissions.size() == 1);
  CHECK(r.emissions[0].event == EventKind::anomaly);
  r = h.feed(RfidRead{650, "04a1b2c3"});  // lowercase: also malformed
  CHECK(r.emissions[0].event == EventKind::anomaly);
  run_full_wash(h, 1000);
  CHECK(h.last().rfid_uid == "04A1B2C3");
}

TEST_CASE("abort mid-procedure keeps NS and restarts from step one") {
  Harness h;
  h.feed(EntryDetected{0});
  h.feed(TapDistance{1000, 300});
  for (Millis x = 1000; x <= 1000 + 5 * 5000; x += 250) h.feed(Tick{x});
  REQUIRE(h.ctrl.washing_step() == 6);
  auto r = h.feed(TapDistance{1000 + 5 * 5000 + 100, 600});
  REQUIRE(r.emissions.size() == 1);
  CHECK(r.emissions[0].event == EventKind::hh_abort);
  CHECK(h.ctrl.counters().sanitizations == 0);

  // Immediate re-approach starts a fresh procedure at step 1.
  r = h.feed(TapDistance{1000 + 5 * 5000 + 200, 300});
  CHECK(h.ctrl.washing_step() == 1);
  CHECK(has_command(r.commands, OrientationStep{1}));
  auto steps = orientation_indices(h.commands);
  // 1..6, off, then 1 again
  std::vector<int> expected{1, 2, 3, 4, 5, 6, 0, 1};
  CHECK(steps == expected);
}

TEST_CASE("random abort/complete mixes count only completions") {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    Harness h;
    h.feed(EntryDetected{0});
    Millis t = 1000;
    std::uint64_t completes = 0;
    int washes = 2 + static_cast<int>(rng.next() % 4);
    for (int i = 0; i < washes; ++i) {
      if (rng.next() % 2 == 0) {
        t = run_full_wash(h, t);
        ++completes;
      } else {
        // Walk away somewhere inside the procedure.
        Millis leave = t + 1 + static_cast<Millis>(rng.next() % 54000);
        h.feed(TapDistance{t, 300});
        for (Millis x = t; x < leave; x += 250) h.feed(Tick{x});
        h.feed(TapDistance{leave, 600});
        t = leave + 500;
      }
      t += 250;
    }
    CHECK(h.ctrl.counters().sanitizations == completes);
  }
}

TEST_CASE("abort outside washing is a no-op") {
  Harness h;
  h.feed(EntryDetected{0});
  // Going absent while merely prompting must not emit anything.
  auto r = h.feed(TapDistance{1000, 600});
  CHECK(r.commands.empty());
  CHECK(r.emissions.empty());
}

TEST_CASE("valve watchdog force-closes during an overlong procedure") {
  ControllerConfig cfg;
  cfg.valve_max_open_ms = 30000;  // shorter than the 55 s procedure
  Harness h(cfg);
  h.feed(EntryDetected{0});
  h.feed(TapDistance{1000, 300});
  bool saw_anomaly = false;
  for (Millis x = 1000; x <= 1000 + 55000; x += 250) {
    auto r = h.feed(Tick{x});
    for (const auto& dp : r.emissions) {
      if (dp.event == EventKind::anomaly) {
        saw_anomaly = true;
        CHECK(dp.ts == 1000 + 30000);
      }
    }
  }
  CHECK(saw_anomaly);
  // The procedure itself still completes.
  CHECK(h.last().event == EventKind::hh_complete);
  CHECK(h.ctrl.counters().sanitizations == 1);
}

TEST_CASE("emission sequence is gapless from one") {
  Harness h;
  Millis t = 0;
  for (int i = 0; i < 5; ++i) h.feed(EntryDetected{t += 500});
  for (int i = 0; i < 7; ++i) h.feed(ExitDetected{t += 500});
  run_full_wash(h, t + 500);
  for (std::size_t i = 0; i < h.emissions.size(); ++i) {
    CHECK(h.emissions[i].seq == i + 1);
  }
}

TEST_CASE("embedded rate always recomputes from embedded counters") {
  Harness h;
  Millis t = 0;
  SplitMix64 rng(99);
  for (int i = 0; i < 30; ++i) {
    if (rng.next() % 3 == 0) {
      h.feed(ExitDetected{t += 300});
    } else {
      h.feed(EntryDetected{t += 300});
    }
  }
  run_full_wash(h, t + 500);
  for (const auto& dp : h.emissions) {
    CHECK(dp.rate == compute_rate(dp.counters));
  }
}

TEST_CASE("replaying an event list is byte-identical") {
  std::vector<ControllerEvent> events;
  events.push_back(EntryDetected{100});
  events.push_back(TapDistance{500, 300});
  events.push_back(RfidRead{700, "AABBCCDD"});
  for (Millis x = 750; x < 60000; x += 250) events.push_back(Tick{x});
  events.push_back(TapDistance{60000, 600});
  events.push_back(ExitDetected{60500});

  auto run_once = [&] {
    Harness h;
    std::string bytes;
    for (const auto& ev : events) h.feed(ev);
    for (const auto& dp : h.emissions) bytes += encode(dp) + "\n";
    for (const auto& c : h.commands) bytes += to_string(c) + "\n";
    return bytes;
  };
  CHECK(run_once() == run_once());
}

TEST_CASE("six-row fixture reproduces the published table") {
  // Entries, exits and washes arranged so six checkpoints hit the
  // published counter rows exactly.
  Harness h;
  Millis t = 0;
  auto advance = [&](Millis dt) { return t += dt; };

  // Row 1: one access, two complete washes -> 100.00 | 2 2 1 0 1
  h.feed(EntryDetected{advance(1000)});
  t = run_full_wash(h, advance(1000));
  t = run_full_wash(h, advance(1000));
  {
    const auto& dp = h.last();
    CHECK(dp.rate.percent_x100 == 10000);
    CHECK(dp.counters.opportunities == 2);
    CHECK(dp.counters.sanitizations == 2);
    CHECK(dp.counters.accesses == 1);
    CHECK(dp.counters.exits == 0);
    CHECK(dp.counters.occupancy == 1);
  }

  // Row 2: +1 access, +1 wash, +1 exit -> 75.00 | 4 3 2 1 1
  h.feed(EntryDetected{advance(1000)});
  t = run_full_wash(h, advance(1000));
  h.feed(ExitDetected{advance(1000)});
  {
    const auto& dp = h.last();
    CHECK(dp.rate.percent_x100 == 7500);
    CHECK(dp.counters.opportunities == 4);
    CHECK(dp.counters.sanitizations == 3);
    CHECK(dp.counters.accesses == 2);
    CHECK(dp.counters.exits == 1);
    CHECK(dp.counters.occupancy == 1);
  }

  // Row 3: +4 accesses, +3 exits, +1 wash -> 33.33 | 12 4 6 4 2
  for (int i = 0; i < 4; ++i) h.feed(EntryDetected{advance(500)});
  for (int i = 0; i < 3; ++i) h.feed(ExitDetected{advance(500)});
  t = run_full_wash(h, advance(1000));
  {
    const auto& dp = h.last();
    CHECK(dp.rate.percent_x100 == 3333);
    CHECK(dp.counters.opportunities == 12);
    CHECK(dp.counters.sanitizations == 4);
    CHECK(dp.counters.accesses == 6);
    CHECK(dp.counters.exits == 4);
    CHECK(dp.counters.occupancy == 2);
  }

  // Row 4: +2 accesses, +1 exit, +1 wash -> 31.25 | 16 5 8 5 3
  for (int i = 0; i < 2; ++i) h.feed(EntryDetected{advance(500)});
  h.feed(ExitDetected{advance(500)});
  t = run_full_wash(h, advance(1000));
  {
    const auto& dp = h.last();
    CHECK(dp.rate.percent_x100 == 3125);
    CHECK(dp.counters.opportunities == 16);
    CHECK(dp.counters.sanitizations == 5);
    CHECK(dp.counters.accesses == 8);
    CHECK(dp.counters.exits == 5);
    CHECK(dp.counters.occupancy == 3);
  }

  // Row 5: +1 wash -> 37.50 | 16 6 8 5 3
  t = run_full_wash(h, advance(1000));
  {
    const auto& dp = h.last();
    CHECK(dp.rate.percent_x100 == 3750);
    CHECK(dp.counters.sanitizations == 6);
  }

  // Row 6: +1 access, +1 wash -> 38.89 | 18 7 9 5 4
  h.feed(EntryDetected{advance(500)});
  t = run_full_wash(h, advance(1000));
  {
    const auto& dp = h.last();
    CHECK(dp.rate.percent_x100 == 3889);
    CHECK(dp.counters.opportunities == 18);
    CHECK(dp.counters.sanitizations == 7);
    CHECK(dp.counters.accesses == 9);
    CHECK(dp.counters.exits == 5);
    CHECK(dp.counters.occupancy == 4);
  }
}
