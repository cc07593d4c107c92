#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace hh {

// MFRC522-style tag UIDs: 4 or 7 bytes, printed as uppercase hex.
inline bool is_valid_rfid_uid(std::string_view uid) {
  if (uid.size() != 8 && uid.size() != 14) return false;
  for (char c : uid) {
    bool ok = (c >= '0' && c <= '9') || (c >= 'A' && c <= 'F');
    if (!ok) return false;
  }
  return true;
}

// Deterministic 64-bit generator (splitmix64). Used for trace jitter and
// backoff jitter so runs are reproducible from a seed.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1).
  double next_unit() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // Approximately normal (Irwin-Hall, 12 uniforms), mean 0, stddev `sigma`,
  // clamped to +-3 sigma. Pure arithmetic, so bit-stable across platforms.
  double next_gaussian(double sigma) {
    double sum = 0.0;
    for (int i = 0; i < 12; ++i) sum += next_unit();
    double z = sum - 6.0;
    if (z > 3.0) z = 3.0;
    if (z < -3.0) z = -3.0;
    return z * sigma;
  }

 private:
  std::uint64_t state_;
};

inline std::string json_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

}  // namespace hh
