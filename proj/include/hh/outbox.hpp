#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hh/events.hpp"
#include "hh/framing.hpp"
#include "hh/wire.hpp"

namespace hh {

struct PendingRecord {
  std::uint64_t seq;
  std::string payload;  // canonical wire encoding
};

// Durable store-and-forward queue between the controller and the MQTT
// publisher. Records are appended (and fsynced) before enqueue() returns;
// the ack watermark lives in a sidecar file replaced atomically, so a
// kill/restart never re-sends acked records and never loses unacked ones.
// If the disk fails, records queue in memory and each later enqueue retries
// the flush, so the controller keeps running.
// Safe for one producer thread and one sender thread.
class Outbox {
 public:
  explicit Outbox(const std::string& dir) : dir_(dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir_);
    auto scan = scan_frames(log_path());
    if (scan.torn_tail) {
      std::fprintf(stderr, "[outbox] dropping torn tail in %s\n",
                   log_path().c_str());
    }
    writer_.open(log_path(), scan.good_bytes);
    good_bytes_ = scan.good_bytes;
    for (auto& payload : scan.records) {
      WireDataPoint w = decode(payload);
      records_.push_back(PendingRecord{w.seq, std::move(payload)});
      last_seq_ = w.seq;
    }
    watermark_ = load_watermark();
  }

  // Persists one data point. The sequence number must grow strictly; a
  // regression is a programming error on the producer side.
  // Returns true when the record hit disk, false when it is only queued in
  // memory because storage failed.
  bool enqueue(const DataPoint& dp) { return enqueue(to_wire(dp)); }

  bool enqueue(const WireDataPoint& w) {
    std::lock_guard<std::mutex> lock(mu_);
    if (last_seq_ != 0 && w.seq <= last_seq_) {
      throw std::invalid_argument(
          "outbox seq regression: got " + std::to_string(w.seq) +
          " after " + std::to_string(last_seq_));
    }
    last_seq_ = w.seq;
    PendingRecord rec{w.seq, encode(w)};
    bool durable = flush_overflow() && persist(rec.payload);
    if (!durable) overflow_.push_back(rec);
    records_.push_back(std::move(rec));
    return durable;
  }

  // Records not yet acknowledged by the broker, oldest first.
  std::vector<PendingRecord> pending(std::size_t limit = 0) const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<PendingRecord> out;
    for (const auto& r : records_) {
      if (r.seq <= watermark_) continue;
      out.push_back(r);
      if (limit && out.size() >= limit) break;
    }
    return out;
  }

  std::size_t pending_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::size_t n = 0;
    for (const auto& r : records_)
      if (r.seq > watermark_) ++n;
    return n;
  }

  void ack(std::uint64_t seq) {
    std::lock_guard<std::mutex> lock(mu_);
    if (seq <= watermark_) return;
    watermark_ = seq;
    write_file_atomic(ack_path(), std::to_string(watermark_) + "\n");
  }

  std::uint64_t watermark() const {
    std::lock_guard<std::mutex> lock(mu_);
    return watermark_;
  }
  std::uint64_t last_seq() const {
    std::lock_guard<std::mutex> lock(mu_);
    return last_seq_;
  }
  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return records_.size();
  }
  std::size_t overflow_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return overflow_.size();
  }

 private:
  std::string log_path() const { return dir_ + "/outbox.log"; }
  std::string ack_path() const { return dir_ + "/outbox.ack"; }

  std::uint64_t load_watermark() const {
    std::ifstream in(ack_path());
    std::uint64_t v = 0;
    if (in) in >> v;
    return v;
  }

  // One append, with a single reopen retry so a transient disk failure
  // heals on the next write. The reopen never extends the file past what
  // is actually there.
  bool persist(const std::string& payload) {
    try {
      writer_.append(payload);
    } catch (const StorageError&) {
      try {
        std::error_code ec;
        auto size = std::filesystem::file_size(log_path(), ec);
        std::size_t keep = ec ? 0 : static_cast<std::size_t>(size);
        writer_.open(log_path(), std::min(good_bytes_, keep));
        good_bytes_ = std::min(good_bytes_, keep);
        writer_.append(payload);
      } catch (const StorageError&) {
        return false;
      }
    }
    good_bytes_ += payload.size() + 8;
    return true;
  }

  // Tries to write any memory-only records to disk. Returns true when the
  // overflow list is empty afterwards.
  bool flush_overflow() {
    while (!overflow_.empty()) {
      if (!persist(overflow_.front().payload)) return false;
      overflow_.erase(overflow_.begin());
    }
    return true;
  }

  std::string dir_;
  mutable std::mutex mu_;
  FrameWriter writer_;
  std::vector<PendingRecord> records_;
  std::vector<PendingRecord> overflow_;  // not yet on disk
  std::size_t good_bytes_ = 0;           // verified length of the log file
  std::uint64_t last_seq_ = 0;
  std::uint64_t watermark_ = 0;
};

}  // namespace hh
