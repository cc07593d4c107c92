// hh - hand hygiene monitoring toolkit
//
// Subcommands:
//   simulate  run a scenario and write its data points as JSON lines
//   serve     run the ingest/monitoring service (HTTP + optional MQTT)
//   replay    post a recorded trace into a running service
//   report    render the eight-block dashboard and records table

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "hh/hh.hpp"

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

std::string getenv_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

int cmd_simulate(const std::string& scenario_path, std::uint64_t seed,
                 const std::string& out_path, const std::string& publish_url,
                 const std::string& data_dir) {
  std::ifstream in(scenario_path);
  if (!in) {
    std::cerr << "cannot open scenario: " << scenario_path << "\n";
    return 2;
  }
  std::stringstream buf;
  buf << in.rdbuf();

  hh::Scenario scenario;
  try {
    scenario = hh::load_scenario(buf.str());
  } catch (const hh::ScenarioError& e) {
    for (const auto& v : e.violations()) std::cerr << v << "\n";
    return 2;
  }

  hh::SimResult result = hh::run(scenario, seed);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (out_path != "-") {
    file.open(out_path, std::ios::binary | std::ios::trunc);
    if (!file) {
      std::cerr << "cannot open output: " << out_path << "\n";
      return 1;
    }
    out = &file;
  }
  for (const auto& dp : result.emissions) *out << hh::encode(dp) << "\n";
  out->flush();

  std::cerr << "simulated " << result.emissions.size() << " data points, "
            << "final counters: NAc=" << result.final_counters.accesses
            << " NE=" << result.final_counters.exits
            << " NO=" << result.final_counters.opportunities
            << " NS=" << result.final_counters.sanitizations
            << " NOc=" << result.final_counters.occupancy << "\n";

  if (!publish_url.empty()) {
    std::string dir = data_dir.empty()
                          ? getenv_or("HH_DATA_DIR", ".") + "/outbox-" +
                                scenario.config.device_id
                          : data_dir;
    try {
      hh::Outbox outbox(dir);
      for (const auto& dp : result.emissions) outbox.enqueue(dp);
      hh::PublisherConfig pcfg;
      pcfg.mqtt_url = publish_url;
      pcfg.device_id = scenario.config.device_id;
      hh::Publisher publisher(outbox, pcfg);
      if (!publisher.drain(g_stop)) {
        std::cerr << "publish interrupted; " << outbox.pending_count()
                  << " records still pending in " << dir << "\n";
        return 1;
      }
      std::cerr << "published " << publisher.published() << " records to "
                << publish_url << "\n";
    } catch (const std::exception& e) {
      std::cerr << "publish failed: " << e.what() << "\n";
      return 1;
    }
  }
  return 0;
}

int cmd_serve(const std::string& data_dir, const std::string& http_addr,
              const std::string& mqtt_url) {
  auto colon = http_addr.rfind(':');
  if (colon == std::string::npos) {
    std::cerr << "--http expects host:port\n";
    return 1;
  }
  std::string host = http_addr.substr(0, colon);
  int port = std::atoi(http_addr.c_str() + colon + 1);
  if (port <= 0) {
    std::cerr << "--http expects host:port\n";
    return 1;
  }

  std::unique_ptr<hh::IngestStore> store;
  try {
    store = std::make_unique<hh::IngestStore>(data_dir);
  } catch (const std::exception& e) {
    std::cerr << "cannot load data dir: " << e.what() << "\n";
    return 1;
  }

  httplib::Server server;
  hh::install_routes(server, *store);
  if (!server.bind_to_port(host, port)) {
    std::cerr << "cannot bind " << http_addr << "\n";
    return 1;
  }

  std::thread bridge_thread;
  std::unique_ptr<hh::MqttBridge> bridge;
  if (!mqtt_url.empty()) {
    bridge = std::make_unique<hh::MqttBridge>(*store, mqtt_url);
    bridge_thread = std::thread([&] { bridge->run(g_stop); });
  }

  std::thread stopper([&] {
    while (!g_stop.load()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    server.stop();
  });

  std::cerr << "serving " << data_dir << " on http://" << http_addr;
  if (!mqtt_url.empty()) std::cerr << ", consuming " << mqtt_url;
  std::cerr << "\n";
  server.listen_after_bind();
  g_stop.store(true);
  stopper.join();
  if (bridge_thread.joinable()) bridge_thread.join();
  return 0;
}

int cmd_replay(const std::string& trace_path, const std::string& target_url,
               double rate_rps) {
  std::ifstream in(trace_path);
  if (!in) {
    std::cerr << "cannot open trace: " << trace_path << "\n";
    return 2;
  }

  httplib::Client client(target_url);
  client.set_connection_timeout(5);
  client.set_read_timeout(10);

  std::string line;
  std::size_t line_no = 0;
  std::size_t sent = 0;
  auto interval = rate_rps > 0
                      ? std::chrono::duration_cast<std::chrono::microseconds>(
                            std::chrono::duration<double>(1.0 / rate_rps))
                      : std::chrono::microseconds(0);
  auto next_send = std::chrono::steady_clock::now();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      hh::decode(line);
    } catch (const hh::DecodeError& e) {
      std::cerr << "line " << line_no << ": " << e.what() << "\n";
      return 2;
    }
    if (interval.count() > 0) {
      std::this_thread::sleep_until(next_send);
      next_send += interval;
    }
    auto res = client.Post("/api/v1/ingest", line, "application/json");
    if (!res) {
      std::cerr << "line " << line_no << ": no response from " << target_url << "\n";
      return 1;
    }
    if (res->status >= 300) {
      std::cerr << "line " << line_no << ": service returned " << res->status
                << ": " << res->body << "\n";
      return 1;
    }
    ++sent;
  }
  std::cerr << "replayed " << sent << " records to " << target_url << "\n";
  return 0;
}

int cmd_report(const std::string& source, const std::string& device_id,
               const std::string& format, const std::string& locale) {
  hh::ReportOptions opts;
  if (locale == "br") opts.decimal_sep = ',';

  hh::EightBlockSummary summary;
  std::string summary_json;
  std::vector<hh::WireDataPoint> events;

  bool is_url = source.rfind("http://", 0) == 0 || source.rfind("https://", 0) == 0;
  if (is_url) {
    httplib::Client client(source);
    client.set_connection_timeout(5);
    client.set_read_timeout(10);
    auto res = client.Get("/api/v1/devices/" + device_id + "/summary");
    if (!res) {
      std::cerr << "no response from " << source << "\n";
      return 1;
    }
    if (res->status == 404) {
      std::cerr << "unknown device: " << device_id << "\n";
      return 3;
    }
    if (res->status != 200) {
      std::cerr << "service returned " << res->status << ": " << res->body << "\n";
      return 1;
    }
    summary_json = res->body;

    // Page through the log oldest-last, then flip to ascending.
    std::optional<std::uint64_t> before_seq;
    for (;;) {
      std::string path = "/api/v1/devices/" + device_id + "/events?limit=1000";
      if (before_seq) path += "&before_seq=" + std::to_string(*before_seq);
      auto page = client.Get(path);
      if (!page || page->status != 200) {
        std::cerr << "events query failed\n";
        return 1;
      }
      auto j = nlohmann::json::parse(page->body, nullptr, false);
      if (j.is_discarded() || !j.contains("events") || !j["events"].is_array()) {
        std::cerr << "malformed events response\n";
        return 1;
      }
      if (j["events"].empty()) break;
      for (const auto& ev : j["events"]) {
        events.push_back(hh::decode(ev.dump()));
      }
      before_seq = events.back().seq;
      if (*before_seq <= 1) break;
    }
    std::reverse(events.begin(), events.end());
  } else {
    std::ifstream in(source);
    if (!in) {
      std::cerr << "cannot open source: " << source << "\n";
      return 1;
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      hh::WireDataPoint dp;
      try {
        dp = hh::decode(line);
      } catch (const hh::DecodeError& e) {
        std::cerr << "line " << line_no << ": " << e.what() << "\n";
        return 2;
      }
      if (dp.device_id == device_id) events.push_back(std::move(dp));
    }
    if (events.empty()) {
      std::cerr << "unknown device: " << device_id << "\n";
      return 3;
    }
    summary = hh::fold_summary(device_id, events);
    summary_json = hh::summary_to_json(summary);
  }

  if (format == "json") {
    std::cout << summary_json << "\n";
    return 0;
  }

  if (is_url) {
    // Re-derive the struct from the verbatim service response.
    summary = hh::fold_summary(device_id, events);
  }
  std::cout << hh::render_report(device_id, summary, events, opts);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  CLI::App app{"hand hygiene monitoring toolkit"};
  app.require_subcommand(1);

  // simulate
  std::string scenario_path, out_path = "-", publish_url, sim_data_dir;
  std::uint64_t seed = 1;
  auto* simulate = app.add_subcommand("simulate", "run a scenario");
  simulate->add_option("--scenario", scenario_path, "scenario file")->required();
  simulate->add_option("--seed", seed, "jitter seed");
  simulate->add_option("--out", out_path, "output JSONL path ('-' for stdout)");
  simulate->add_option("--publish", publish_url, "also publish to this MQTT broker");
  simulate->add_option("--data-dir", sim_data_dir, "outbox directory for --publish");

  // serve
  std::string data_dir = getenv_or("HH_DATA_DIR", "./hh-data");
  std::string http_addr = getenv_or("HH_HTTP_LISTEN", "127.0.0.1:8080");
  std::string mqtt_url = getenv_or("HH_MQTT_URL", "");
  auto* serve = app.add_subcommand("serve", "run the monitoring service");
  serve->add_option("--data-dir", data_dir, "event log directory");
  serve->add_option("--http", http_addr, "HTTP listen address host:port");
  serve->add_option("--mqtt", mqtt_url, "MQTT broker to consume");

  // replay
  std::string trace_path, target_url;
  double rate_rps = 0.0;
  auto* replay = app.add_subcommand("replay", "post a trace into a service");
  replay->add_option("--trace", trace_path, "JSONL trace file")->required();
  replay->add_option("--target", target_url, "service base URL")->required();
  replay->add_option("--rate", rate_rps, "records per second (0 = unlimited)");

  // report
  std::string source, device_id, format = "table", locale;
  auto* report = app.add_subcommand("report", "render the dashboard");
  report->add_option("--source", source, "service URL or JSONL file")->required();
  report->add_option("--device", device_id, "device id")->required();
  report->add_option("--format", format, "table or json")
      ->check(CLI::IsMember({"table", "json"}));
  report->add_option("--locale", locale, "'br' prints decimal commas")
      ->check(CLI::IsMember({"", "br"}));

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed()) {
    return cmd_simulate(scenario_path, seed, out_path, publish_url, sim_data_dir);
  }
  if (serve->parsed()) return cmd_serve(data_dir, http_addr, mqtt_url);
  if (replay->parsed()) return cmd_replay(trace_path, target_url, rate_rps);
  if (report->parsed()) return cmd_report(source, device_id, format, locale);
  return 1;
}
