#pragma once

// Canonical record streams produced by driving a real controller, for the
// ingest/service tests.

#include <vector>

#include "hh/controller.hpp"
#include "hh/wire.hpp"

namespace hh::testing {

class StreamBuilder {
 public:
  explicit StreamBuilder(const std::string& device_id = "dev-1") : ctrl_(cfg(device_id)) {}

  static ControllerConfig cfg(const std::string& device_id) {
    ControllerConfig c;
    c.device_id = device_id;
    return c;
  }

  void entry() { feed(EntryDetected{t_ += 500}); }
  void exit() { feed(ExitDetected{t_ += 500}); }

  void wash() {
    const Millis total = ctrl_.config().procedure_total_ms();
    Millis start = t_ += 500;
    feed(TapDistance{start, 300});
    for (Millis x = start; x <= start + total; x += 250) feed(Tick{x});
    t_ = start + total + 250;
    feed(TapDistance{t_, 600});
    t_ += 250;
  }

  void abort_wash(Millis after_ms) {
    Millis start = t_ += 500;
    feed(TapDistance{start, 300});
    for (Millis x = start; x < start + after_ms; x += 250) feed(Tick{x});
    t_ = start + after_ms;
    feed(TapDistance{t_, 600});
    t_ += 250;
  }

  const std::vector<WireDataPoint>& records() const { return records_; }

 private:
  void feed(const ControllerEvent& ev) {
    auto r = ctrl_.handle(ev);
    for (const auto& dp : r.emissions) records_.push_back(to_wire(dp));
  }

  Controller ctrl_;
  Millis t_ = 0;
  std::vector<WireDataPoint> records_;
};

// The published sample-table shape: 9 accesses, 5 exits, 7 washes ending at
// rate 38.89%.
inline std::vector<WireDataPoint> table_stream() {
  StreamBuilder b;
  b.entry();
  b.wash();
  b.wash();
  b.entry();
  b.wash();
  b.exit();
  for (int i = 0; i < 4; ++i) b.entry();
  for (int i = 0; i < 3; ++i) b.exit();
  b.wash();
  b.entry();
  b.entry();
  b.exit();
  b.wash();
  b.wash();
  b.entry();
  b.wash();
  return b.records();
}

// The dashboard-figure shape: 12 accesses, 10 exits, 13 washes, occupancy 2,
// rate 54.17%.
inline std::vector<WireDataPoint> dashboard_stream() {
  StreamBuilder b;
  for (int i = 0; i < 12; ++i) b.entry();
  for (int i = 0; i < 13; ++i) b.wash();
  for (int i = 0; i < 10; ++i) b.exit();
  return b.records();
}

}  // namespace hh::testing
