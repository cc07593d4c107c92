#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hh/clock.hpp"

namespace hh {

// Hygiene procedure duration must land inside the recommended band.
inline constexpr Millis kProcedureMinMs = 40000;
inline constexpr Millis kProcedureMaxMs = 60000;
inline constexpr int kStepCount = 11;

struct ControllerConfig {
  Millis step_duration_ms = 5000;
  int step_count = kStepCount;  // fixed; validated, not tunable
  int tap_present_mm = 400;     // presence when distance <= this
  int tap_absent_mm = 500;      // absence when distance >= this
  Millis rfid_pending_ms = 60000;
  Millis valve_max_open_ms = 120000;
  std::string device_id = "hh-dev-1";

  Millis procedure_total_ms() const { return step_count * step_duration_ms; }

  std::vector<std::string> validate() const {
    std::vector<std::string> issues;
    if (step_count != kStepCount) {
      issues.push_back("step_count must be " + std::to_string(kStepCount) +
                       ", got " + std::to_string(step_count));
    }
    if (step_duration_ms <= 0) {
      issues.push_back("step_duration_ms must be positive");
    } else {
      Millis total = procedure_total_ms();
      if (total < kProcedureMinMs || total > kProcedureMaxMs) {
        issues.push_back(
            "step_count x step_duration_ms = " + std::to_string(total) +
            " ms outside [" + std::to_string(kProcedureMinMs) + ", " +
            std::to_string(kProcedureMaxMs) + "] ms");
      }
    }
    if (tap_absent_mm <= tap_present_mm) {
      issues.push_back("tap_absent_mm (" + std::to_string(tap_absent_mm) +
                       ") must be greater than tap_present_mm (" +
                       std::to_string(tap_present_mm) + ")");
    }
    if (tap_present_mm < 0) issues.push_back("tap_present_mm must be >= 0");
    if (rfid_pending_ms <= 0) issues.push_back("rfid_pending_ms must be positive");
    if (valve_max_open_ms <= 0) issues.push_back("valve_max_open_ms must be positive");
    if (device_id.empty()) issues.push_back("device_id must not be empty");
    return issues;
  }
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::vector<std::string>& issues)
      : std::runtime_error(join(issues)), issues_(issues) {}

  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string msg = "invalid controller config:";
    for (const auto& i : issues) msg += " [" + i + "]";
    return msg;
  }
  std::vector<std::string> issues_;
};

}  // namespace hh
