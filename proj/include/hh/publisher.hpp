#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <string>
#include <thread>

#include "hh/clock.hpp"
#include "hh/mqtt.hpp"
#include "hh/outbox.hpp"
#include "hh/util.hpp"

namespace hh {

struct PublisherConfig {
  std::string mqtt_url;
  std::string device_id;
  std::string username;
  std::string password;
  Millis backoff_base_ms = 500;
  Millis backoff_cap_ms = 30000;
  std::size_t high_water = 10000;  // pending-count warning threshold
  int io_timeout_ms = 5000;
  std::uint64_t jitter_seed = 1;
};

// Drains the outbox into the broker: pending records go out in sequence
// order at QoS 1 on hh/v1/<device>/state, the watermark advances on each
// ack, and the newest record is additionally published retained on
// hh/v1/<device>/last. Reconnects with exponentially growing, fully
// jittered delays (base doubling up to the cap).
class Publisher {
 public:
  Publisher(Outbox& outbox, PublisherConfig cfg)
      : outbox_(outbox), cfg_(std::move(cfg)), jitter_(cfg_.jitter_seed) {}

  std::string state_topic() const { return "hh/v1/" + cfg_.device_id + "/state"; }
  std::string last_topic() const { return "hh/v1/" + cfg_.device_id + "/last"; }

  // Publishes until `stop` is raised.
  void run(std::atomic<bool>& stop) {
    while (!stop.load()) {
      if (!step(stop)) backoff(stop);
      if (outbox_.pending_count() == 0 && !stop.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
      }
    }
    client_.disconnect();
  }

  // Publishes until the outbox is empty or `stop` is raised. Returns true
  // once everything pending has been acknowledged.
  bool drain(std::atomic<bool>& stop) {
    while (!stop.load() && outbox_.pending_count() > 0) {
      if (!step(stop)) backoff(stop);
    }
    bool done = outbox_.pending_count() == 0;
    client_.disconnect();
    return done;
  }

  std::uint64_t reconnects() const { return reconnects_; }
  std::uint64_t published() const { return published_; }

 private:
  // One unit of work: connect if needed and push a batch. Returns false
  // when the connection failed and a backoff is due.
  bool step(std::atomic<bool>& stop) {
    if (!client_.connected()) {
      auto url = mqtt::parse_url(cfg_.mqtt_url);
      if (!url) {
        std::fprintf(stderr, "[publisher] bad MQTT URL: %s\n",
                     cfg_.mqtt_url.c_str());
        stop.store(true);
        return true;
      }
      mqtt::ClientOptions opts;
      opts.client_id = "hh-pub-" + cfg_.device_id;
      opts.username = cfg_.username;
      opts.password = cfg_.password;
      opts.io_timeout_ms = cfg_.io_timeout_ms;
      if (!client_.connect(*url, opts)) return false;
      ++reconnects_;
      attempt_ = 0;
    }

    warn_high_water();
    auto batch = outbox_.pending(64);
    std::string last_payload;
    for (const auto& rec : batch) {
      if (stop.load()) return true;
      if (!client_.publish_qos1(state_topic(), rec.payload)) return false;
      outbox_.ack(rec.seq);
      ++published_;
      last_payload = rec.payload;
    }
    if (!last_payload.empty() && outbox_.pending_count() == 0) {
      if (!client_.publish_qos1(last_topic(), last_payload, /*retain=*/true)) {
        return false;
      }
    }
    return true;
  }

  void backoff(std::atomic<bool>& stop) {
    Millis cap = cfg_.backoff_base_ms << std::min<int>(attempt_, 20);
    if (cap > cfg_.backoff_cap_ms) cap = cfg_.backoff_cap_ms;
    ++attempt_;
    Millis delay = static_cast<Millis>(jitter_.next_unit() * static_cast<double>(cap));
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(delay);
    while (!stop.load() && std::chrono::steady_clock::now() < deadline) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  }

  void warn_high_water() {
    std::size_t n = outbox_.pending_count();
    if (n > cfg_.high_water && !high_water_warned_) {
      std::fprintf(stderr, "[publisher] %zu records pending (high water %zu)\n",
                   n, cfg_.high_water);
      high_water_warned_ = true;
    } else if (n <= cfg_.high_water) {
      high_water_warned_ = false;
    }
  }

  Outbox& outbox_;
  PublisherConfig cfg_;
  mqtt::Client client_;
  SplitMix64 jitter_;
  int attempt_ = 0;
  bool high_water_warned_ = false;
  std::uint64_t reconnects_ = 0;
  std::uint64_t published_ = 0;
};

}  // namespace hh
