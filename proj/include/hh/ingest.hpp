#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "hh/counters.hpp"
#include "hh/framing.hpp"
#include "hh/wire.hpp"

namespace hh {

enum class IngestStatus { accepted, duplicate, rejected };

struct IngestResult {
  IngestStatus status;
  std::string reason;  // set for rejected
};

// The dashboard aggregate: one field per block, in display order.
struct EightBlockSummary {
  std::uint64_t accesses = 0;
  std::uint64_t exits = 0;
  std::uint64_t opportunities = 0;
  std::uint64_t sanitizations = 0;
  std::string rate_series_ref;
  std::uint64_t occupancy = 0;
  std::optional<std::int64_t> current_rate_percent_x100;
  std::string records_ref;

  bool operator==(const EightBlockSummary&) const = default;
};

inline std::string summary_to_json(const EightBlockSummary& s) {
  std::string out = "{\"accesses\":" + std::to_string(s.accesses) +
                    ",\"exits\":" + std::to_string(s.exits) +
                    ",\"opportunities\":" + std::to_string(s.opportunities) +
                    ",\"sanitizations\":" + std::to_string(s.sanitizations) +
                    ",\"rate_series_ref\":\"" + json_escape(s.rate_series_ref) +
                    "\",\"occupancy\":" + std::to_string(s.occupancy) +
                    ",\"current_rate_percent\":";
  out += s.current_rate_percent_x100
             ? format_percent_x100(*s.current_rate_percent_x100)
             : "null";
  out += ",\"records_ref\":\"" + json_escape(s.records_ref) + "\"}";
  return out;
}

struct RateBucket {
  Millis bucket_start = 0;
  std::optional<std::int64_t> rate_percent_x100;

  bool operator==(const RateBucket&) const = default;
};

struct DeviceInfo {
  std::string device_id;
  std::uint64_t records = 0;
  std::uint64_t last_seq = 0;
  Millis last_ts = 0;
  int generation = 1;
};

// Event-sourced monitoring backend. Every accepted record is appended to a
// per-device log before any aggregate reflects it; aggregates live only in
// memory and are rebuilt by folding the logs on startup. A record whose
// (device, seq) is already stored is a duplicate (publisher retries are
// expected); a record whose counters move backwards is rejected. A seq-1
// record arriving after higher seqs means the device restarted: the old log
// is archived as a finished generation and a new one starts.
class IngestStore {
 public:
  explicit IngestStore(const std::string& data_dir) : dir_(data_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir_);
    for (const auto& entry : fs::directory_iterator(dir_)) {
      if (!entry.is_directory()) continue;
      load_device(entry.path().filename().string());
    }
  }

  IngestResult ingest(const WireDataPoint& dp) {
    if (!valid_device_id(dp.device_id)) {
      return {IngestStatus::rejected, "device_id has unsupported characters"};
    }
    if (dp.seq == 0) return {IngestStatus::rejected, "seq must be >= 1"};

    DeviceState& dev = device_for(dp.device_id);
    std::unique_lock lock(dev.mu);

    if (!dev.log.empty()) {
      std::uint64_t base = dev.log.front().seq;
      std::uint64_t last = dev.log.back().seq;
      if (dp.seq == 1 && base == 1 && dev.log.front() == dp) {
        // Publisher retransmission of the very first record.
        return {IngestStatus::duplicate, ""};
      }
      if (dp.seq == 1) {
        // A fresh seq-1 record means the controller restarted from
        // scratch: archive this log and begin a new generation.
        open_generation(dev, dp.device_id, dev.generation + 1);
      } else if (dp.seq <= last) {
        return {IngestStatus::duplicate, ""};
      } else if (dp.seq > last + 1) {
        return {IngestStatus::rejected,
                "seq gap: got " + std::to_string(dp.seq) + " after " +
                    std::to_string(last)};
      } else if (auto field = regressing_field(dev.log.back(), dp)) {
        return {IngestStatus::rejected, "counter regression: " + *field};
      }
    }

    try {
      dev.writer.append(encode(dp));
    } catch (const StorageError& e) {
      return {IngestStatus::rejected, std::string("storage: ") + e.what()};
    }
    dev.log.push_back(dp);
    return {IngestStatus::accepted, ""};
  }

  std::vector<DeviceInfo> devices() const {
    std::shared_lock map_lock(map_mu_);
    std::vector<DeviceInfo> out;
    for (const auto& [id, dev] : devices_) {
      std::shared_lock lock(dev->mu);
      DeviceInfo info;
      info.device_id = id;
      info.records = dev->log.size();
      info.generation = dev->generation;
      if (!dev->log.empty()) {
        info.last_seq = dev->log.back().seq;
        info.last_ts = dev->log.back().ts;
      }
      out.push_back(std::move(info));
    }
    return out;
  }

  std::optional<EightBlockSummary> summary(const std::string& device_id) const {
    const DeviceState* dev = find_device(device_id);
    if (!dev) return std::nullopt;
    std::shared_lock lock(dev->mu);
    EightBlockSummary s;
    s.rate_series_ref = "/api/v1/devices/" + device_id + "/rate-series";
    s.records_ref = "/api/v1/devices/" + device_id + "/events";
    if (!dev->log.empty()) {
      const WireDataPoint& last = dev->log.back();
      s.accesses = last.accesses;
      s.exits = last.exits;
      s.opportunities = last.opportunities;
      s.sanitizations = last.sanitizations;
      s.occupancy = last.occupancy;
      s.current_rate_percent_x100 = compute_rate(last.counters()).percent_x100;
    }
    return s;
  }

  // Step-interpolated rate per bucket: the rate of the last record at or
  // before each bucket's end, null before the first record.
  std::optional<std::vector<RateBucket>> rate_series(
      const std::string& device_id, Millis from_ts, Millis to_ts,
      Millis bucket_ms) const {
    if (from_ts >= to_ts) throw std::invalid_argument("from must be before to");
    if (bucket_ms < 1000) throw std::invalid_argument("bucket_ms must be >= 1000");
    if ((to_ts - from_ts) / bucket_ms > 200000) {
      throw std::invalid_argument("too many buckets");
    }
    const DeviceState* dev = find_device(device_id);
    if (!dev) return std::nullopt;
    std::shared_lock lock(dev->mu);
    std::vector<RateBucket> out;
    for (Millis start = from_ts; start < to_ts; start += bucket_ms) {
      Millis end = start + bucket_ms;
      RateBucket b;
      b.bucket_start = start;
      // last record with ts < end (log ts are non-decreasing)
      auto it = std::upper_bound(
          dev->log.begin(), dev->log.end(), end - 1,
          [](Millis t, const WireDataPoint& w) { return t < w.ts; });
      if (it != dev->log.begin()) {
        b.rate_percent_x100 = std::prev(it)->rate_percent_x100;
      }
      out.push_back(b);
    }
    return out;
  }

  // Newest-first page of records; `before_seq` returns records strictly
  // older than that sequence number.
  std::optional<std::vector<WireDataPoint>> events(
      const std::string& device_id, std::size_t limit,
      std::optional<std::uint64_t> before_seq = std::nullopt) const {
    if (limit < 1 || limit > 1000) {
      throw std::invalid_argument("limit must be in [1, 1000]");
    }
    const DeviceState* dev = find_device(device_id);
    if (!dev) return std::nullopt;
    std::shared_lock lock(dev->mu);
    std::vector<WireDataPoint> out;
    for (auto it = dev->log.rbegin(); it != dev->log.rend(); ++it) {
      if (before_seq && it->seq >= *before_seq) continue;
      out.push_back(*it);
      if (out.size() >= limit) break;
    }
    return out;
  }

  const std::string& data_dir() const { return dir_; }

 private:
  struct DeviceState {
    mutable std::shared_mutex mu;
    std::vector<WireDataPoint> log;  // current generation, ascending seq
    int generation = 1;
    FrameWriter writer;
  };

  static bool valid_device_id(const std::string& id) {
    if (id.empty() || id.size() > 128) return false;
    if (id[0] == '.') return false;
    for (char c : id) {
      bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
      if (!ok) return false;
    }
    return true;
  }

  static std::optional<std::string> regressing_field(const WireDataPoint& prev,
                                                     const WireDataPoint& next) {
    if (next.accesses < prev.accesses) return "accesses";
    if (next.exits < prev.exits) return "exits";
    if (next.opportunities < prev.opportunities) return "opportunities";
    if (next.sanitizations < prev.sanitizations) return "sanitizations";
    return std::nullopt;
  }

  std::string device_dir(const std::string& id) const { return dir_ + "/" + id; }

  static std::string gen_log_name(int generation) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "gen-%06d.log", generation);
    return buf;
  }

  std::string gen_log_path(const std::string& id, int generation) const {
    return device_dir(id) + "/" + gen_log_name(generation);
  }

  void open_generation(DeviceState& dev, const std::string& id, int generation) {
    dev.generation = generation;
    dev.log.clear();
    dev.writer.open(gen_log_path(id, generation), 0);
  }

  // Loads the highest-numbered generation log for one device directory.
  void load_device(const std::string& id) {
    namespace fs = std::filesystem;
    if (!valid_device_id(id)) return;
    int max_gen = 0;
    for (const auto& f : fs::directory_iterator(device_dir(id))) {
      auto name = f.path().filename().string();
      int gen = 0;
      if (std::sscanf(name.c_str(), "gen-%d.log", &gen) == 1 && gen > max_gen) {
        max_gen = gen;
      }
    }
    auto dev = std::make_unique<DeviceState>();
    dev->generation = max_gen == 0 ? 1 : max_gen;
    std::string path = gen_log_path(id, dev->generation);
    auto scan = scan_frames(path);
    if (scan.torn_tail) {
      std::fprintf(stderr, "[ingest] %s: dropping torn trailing record\n",
                   path.c_str());
    }
    for (std::size_t i = 0; i < scan.records.size(); ++i) {
      WireDataPoint w;
      try {
        w = decode(scan.records[i]);
      } catch (const DecodeError& e) {
        throw CorruptLogError(path, scan.offsets[i], e.what());
      }
      if (!dev->log.empty()) {
        if (w.seq != dev->log.back().seq + 1) {
          throw CorruptLogError(path, scan.offsets[i], "sequence break");
        }
        if (regressing_field(dev->log.back(), w)) {
          throw CorruptLogError(path, scan.offsets[i], "counter regression");
        }
      }
      dev->log.push_back(std::move(w));
    }
    dev->writer.open(path, scan.good_bytes);
    std::unique_lock map_lock(map_mu_);
    devices_[id] = std::move(dev);
  }

  DeviceState& device_for(const std::string& id) {
    {
      std::shared_lock map_lock(map_mu_);
      auto it = devices_.find(id);
      if (it != devices_.end()) return *it->second;
    }
    std::unique_lock map_lock(map_mu_);
    auto it = devices_.find(id);
    if (it != devices_.end()) return *it->second;
    std::filesystem::create_directories(device_dir(id));
    auto dev = std::make_unique<DeviceState>();
    dev->writer.open(gen_log_path(id, 1), 0);
    auto [pos, inserted] = devices_.emplace(id, std::move(dev));
    return *pos->second;
  }

  const DeviceState* find_device(const std::string& id) const {
    std::shared_lock map_lock(map_mu_);
    auto it = devices_.find(id);
    return it == devices_.end() ? nullptr : it->second.get();
  }

  std::string dir_;
  mutable std::shared_mutex map_mu_;
  std::map<std::string, std::unique_ptr<DeviceState>> devices_;
};

}  // namespace hh
