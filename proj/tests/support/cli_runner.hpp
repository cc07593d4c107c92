#pragma once

// Helpers for exercising the hh binary as a subprocess.

#include <sys/wait.h>
#include <unistd.h>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

#include <httplib.h>

#include "temp_dir.hpp"

namespace hh::testing {

inline std::string cli_bin() {
  const char* bin = std::getenv("HH_CLI_BIN");
  return bin ? bin : "./tools/hh";
}

inline std::string scenario_dir() {
  const char* dir = std::getenv("HH_SCENARIO_DIR");
  return dir ? dir : "./scenarios";
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs the CLI to completion, capturing stdout/stderr.
inline CliResult run_cli(const std::string& args, const TempDir& dir,
                         const std::string& tag) {
  std::string out_path = dir.str() + "/" + tag + ".out";
  std::string err_path = dir.str() + "/" + tag + ".err";
  std::string cmd =
      cli_bin() + " " + args + " >" + out_path + " 2>" + err_path;
  int rc = std::system(cmd.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  return result;
}

// A `hh serve` child process, killed and reaped on destruction.
class ServeProcess {
 public:
  ServeProcess(const std::string& data_dir, int http_port,
               const std::string& mqtt_url = "") {
    port_ = http_port;
    pid_ = ::fork();
    if (pid_ == 0) {
      std::string http = "127.0.0.1:" + std::to_string(http_port);
      const char* bin = "placeholder";
      std::string bin_s = cli_bin();
      bin = bin_s.c_str();
      if (mqtt_url.empty()) {
        ::execl(bin, bin, "serve", "--data-dir", data_dir.c_str(), "--http",
                http.c_str(), static_cast<char*>(nullptr));
      } else {
        ::execl(bin, bin, "serve", "--data-dir", data_dir.c_str(), "--http",
                http.c_str(), "--mqtt", mqtt_url.c_str(),
                static_cast<char*>(nullptr));
      }
      ::_exit(127);
    }
  }

  ~ServeProcess() { stop(); }

  bool wait_ready(int timeout_ms = 5000) {
    httplib::Client client("127.0.0.1", port_);
    client.set_connection_timeout(0, 200000);
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(timeout_ms);
    while (std::chrono::steady_clock::now() < deadline) {
      auto res = client.Get("/healthz");
      if (res && res->status == 200) return true;
      std::this_thread::sleep_for(std::chrono::milliseconds(25));
    }
    return false;
  }

  void stop() {
    if (pid_ > 0) {
      ::kill(pid_, SIGTERM);
      int status = 0;
      for (int i = 0; i < 100; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) == pid_) {
          pid_ = -1;
          return;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }

  int port() const { return port_; }

 private:
  pid_t pid_ = -1;
  int port_ = 0;
};

// Grabs an ephemeral port. There is a small reuse race, acceptable in tests.
inline int free_port() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  int port = ntohs(addr.sin_port);
  ::close(fd);
  return port;
}

}  // namespace hh::testing
