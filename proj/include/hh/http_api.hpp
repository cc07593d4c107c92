#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>

#include "hh/ingest.hpp"
#include "hh/mqtt.hpp"
#include "hh/util.hpp"
#include "hh/wire.hpp"

namespace hh {

inline std::string rate_series_to_json(Millis from_ts, Millis to_ts,
                                       Millis bucket_ms,
                                       const std::vector<RateBucket>& series) {
  std::string out = "{\"from\":" + std::to_string(from_ts) +
                    ",\"to\":" + std::to_string(to_ts) +
                    ",\"bucket_ms\":" + std::to_string(bucket_ms) +
                    ",\"series\":[";
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (i) out += ',';
    out += "{\"bucket_start\":" + std::to_string(series[i].bucket_start) +
           ",\"rate_percent\":";
    out += series[i].rate_percent_x100
               ? format_percent_x100(*series[i].rate_percent_x100)
               : "null";
    out += '}';
  }
  out += "]}";
  return out;
}

inline std::string events_to_json(const std::vector<WireDataPoint>& events) {
  std::string out = "{\"events\":[";
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (i) out += ',';
    out += encode(events[i]);
  }
  out += "]}";
  return out;
}

inline std::string devices_to_json(const std::vector<DeviceInfo>& devices) {
  std::string out = "{\"devices\":[";
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const auto& d = devices[i];
    if (i) out += ',';
    out += "{\"device_id\":\"" + json_escape(d.device_id) +
           "\",\"records\":" + std::to_string(d.records) +
           ",\"last_seq\":" + std::to_string(d.last_seq) +
           ",\"last_ts\":" + std::to_string(d.last_ts) +
           ",\"generation\":" + std::to_string(d.generation) + "}";
  }
  out += "]}";
  return out;
}

namespace detail {
inline bool parse_i64(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno != 0 || end == s.c_str() || *end != '\0') return false;
  out = v;
  return true;
}

inline void json_error(httplib::Response& res, int status, const std::string& msg) {
  res.status = status;
  res.set_content("{\"error\":\"" + json_escape(msg) + "\"}", "application/json");
}
}  // namespace detail

// Wires the monitoring endpoints onto an httplib server.
inline void install_routes(httplib::Server& srv, IngestStore& store) {
  srv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });

  srv.Get("/api/v1/devices",
          [&store](const httplib::Request&, httplib::Response& res) {
            res.set_content(devices_to_json(store.devices()), "application/json");
          });

  srv.Get(R"(/api/v1/devices/([^/]+)/summary)",
          [&store](const httplib::Request& req, httplib::Response& res) {
            auto s = store.summary(req.matches[1]);
            if (!s) return detail::json_error(res, 404, "unknown device");
            res.set_content(summary_to_json(*s), "application/json");
          });

  srv.Get(R"(/api/v1/devices/([^/]+)/rate-series)",
          [&store](const httplib::Request& req, httplib::Response& res) {
            std::int64_t from = 0, to = 0, bucket = 0;
            if (!detail::parse_i64(req.get_param_value("from"), from) ||
                !detail::parse_i64(req.get_param_value("to"), to) ||
                !detail::parse_i64(req.get_param_value("bucket_ms"), bucket)) {
              return detail::json_error(res, 400,
                                        "from, to and bucket_ms are required integers");
            }
            try {
              auto series = store.rate_series(req.matches[1], from, to, bucket);
              if (!series) return detail::json_error(res, 404, "unknown device");
              res.set_content(rate_series_to_json(from, to, bucket, *series),
                              "application/json");
            } catch (const std::invalid_argument& e) {
              detail::json_error(res, 400, e.what());
            }
          });

  srv.Get(R"(/api/v1/devices/([^/]+)/events)",
          [&store](const httplib::Request& req, httplib::Response& res) {
            std::int64_t limit = 100;
            if (req.has_param("limit") &&
                !detail::parse_i64(req.get_param_value("limit"), limit)) {
              return detail::json_error(res, 400, "limit must be an integer");
            }
            std::optional<std::uint64_t> before_seq;
            if (req.has_param("before_seq")) {
              std::int64_t v = 0;
              if (!detail::parse_i64(req.get_param_value("before_seq"), v) || v < 0) {
                return detail::json_error(res, 400, "before_seq must be an integer");
              }
              before_seq = static_cast<std::uint64_t>(v);
            }
            try {
              auto events = store.events(req.matches[1],
                                         static_cast<std::size_t>(limit), before_seq);
              if (!events) return detail::json_error(res, 404, "unknown device");
              res.set_content(events_to_json(*events), "application/json");
            } catch (const std::invalid_argument& e) {
              detail::json_error(res, 400, e.what());
            }
          });

  srv.Post("/api/v1/ingest",
           [&store](const httplib::Request& req, httplib::Response& res) {
             WireDataPoint dp;
             try {
               dp = decode(req.body);
             } catch (const DecodeError& e) {
               return detail::json_error(res, 400, e.what());
             }
             auto result = store.ingest(dp);
             switch (result.status) {
               case IngestStatus::accepted:
                 res.set_content("{\"status\":\"accepted\",\"seq\":" +
                                     std::to_string(dp.seq) + "}",
                                 "application/json");
                 break;
               case IngestStatus::duplicate:
                 res.set_content("{\"status\":\"duplicate\",\"seq\":" +
                                     std::to_string(dp.seq) + "}",
                                 "application/json");
                 break;
               case IngestStatus::rejected:
                 res.status =
                     result.reason.rfind("storage:", 0) == 0 ? 503 : 409;
                 res.set_content(
                     "{\"status\":\"rejected\",\"reason\":\"" +
                         json_escape(result.reason) + "\"}",
                     "application/json");
                 break;
             }
           });
}

// MQTT subscriber feeding the store: subscribes to every device's state
// topic and ingests each message. Reconnects with the same jittered
// exponential backoff the publisher uses.
class MqttBridge {
 public:
  MqttBridge(IngestStore& store, std::string url, Millis backoff_base_ms = 500,
             Millis backoff_cap_ms = 30000)
      : store_(store),
        url_(std::move(url)),
        backoff_base_ms_(backoff_base_ms),
        backoff_cap_ms_(backoff_cap_ms),
        jitter_(0x6272696467ULL) {}

  void run(std::atomic<bool>& stop) {
    while (!stop.load()) {
      if (!client_.connected()) {
        if (!connect_and_subscribe()) {
          backoff(stop);
          continue;
        }
        attempt_ = 0;
      }
      auto msg = client_.poll(100);
      if (!msg) continue;
      ++received_;
      try {
        WireDataPoint dp = decode(msg->payload);
        auto result = store_.ingest(dp);
        if (result.status == IngestStatus::accepted) ++accepted_;
      } catch (const DecodeError& e) {
        std::fprintf(stderr, "[bridge] undecodable payload on %s: %s\n",
                     msg->topic.c_str(), e.what());
      }
    }
    client_.disconnect();
  }

  std::uint64_t received() const { return received_; }
  std::uint64_t accepted() const { return accepted_; }

 private:
  bool connect_and_subscribe() {
    auto url = mqtt::parse_url(url_);
    if (!url) {
      std::fprintf(stderr, "[bridge] bad MQTT URL: %s\n", url_.c_str());
      return false;
    }
    mqtt::ClientOptions opts;
    opts.client_id = "hh-ingest";
    opts.io_timeout_ms = 2000;
    if (!client_.connect(*url, opts)) return false;
    return client_.subscribe("hh/v1/+/state", 1);
  }

  void backoff(std::atomic<bool>& stop) {
    Millis cap = backoff_base_ms_ << std::min(attempt_, 20);
    if (cap > backoff_cap_ms_) cap = backoff_cap_ms_;
    ++attempt_;
    Millis delay = static_cast<Millis>(jitter_.next_unit() * static_cast<double>(cap));
    auto deadline =
        std::chrono::steady_clock::now() + std::chrono::milliseconds(delay);
    while (!stop.load() && std::chrono::steady_clock::now() < deadline) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  }

  IngestStore& store_;
  std::string url_;
  Millis backoff_base_ms_;
  Millis backoff_cap_ms_;
  SplitMix64 jitter_;
  int attempt_ = 0;
  mqtt::Client client_;
  std::atomic<std::uint64_t> received_{0};
  std::atomic<std::uint64_t> accepted_{0};
};

}  // namespace hh
