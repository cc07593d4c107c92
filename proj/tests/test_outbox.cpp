#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "hh/outbox.hpp"
#include "support/temp_dir.hpp"

using namespace hh;
using hh::testing::TempDir;

namespace {
WireDataPoint wp(std::uint64_t seq) {
  WireDataPoint w;
  w.seq = seq;
  w.device_id = "dev-1";
  w.ts = 1000 * static_cast<Millis>(seq);
  w.event = EventKind::access;
  w.accesses = seq;
  w.opportunities = 2 * seq;
  w.occupancy = seq;
  w.rate_percent_x100 = 0;
  return w;
}
}  // namespace

TEST_CASE("enqueue keeps records pending until acked") {
  TempDir dir("outbox");
  Outbox box(dir.str());
  for (std::uint64_t s = 1; s <= 5; ++s) CHECK(box.enqueue(wp(s)));
  CHECK(box.size() == 5);
  CHECK(box.pending_count() == 5);
  auto pending = box.pending();
  REQUIRE(pending.size() == 5);
  CHECK(pending.front().seq == 1);
  CHECK(pending.back().seq == 5);

  box.ack(2);
  CHECK(box.pending_count() == 3);
  CHECK(box.pending().front().seq == 3);
}

TEST_CASE("restart replays only unacked records") {
  TempDir dir("outbox");
  {
    Outbox box(dir.str());
    for (std::uint64_t s = 1; s <= 5; ++s) box.enqueue(wp(s));
    box.ack(2);
  }
  Outbox again(dir.str());
  CHECK(again.size() == 5);
  CHECK(again.watermark() == 2);
  auto pending = again.pending();
  REQUIRE(pending.size() == 3);
  CHECK(pending[0].seq == 3);
  CHECK(pending[1].seq == 4);
  CHECK(pending[2].seq == 5);
  // Payload bytes are exactly what was enqueued.
  CHECK(pending[0].payload == encode(wp(3)));
}

TEST_CASE("sequence regressions are a programming error") {
  TempDir dir("outbox");
  Outbox box(dir.str());
  box.enqueue(wp(5));
  CHECK_THROWS_AS(box.enqueue(wp(4)), std::invalid_argument);
  CHECK_THROWS_AS(box.enqueue(wp(5)), std::invalid_argument);
  CHECK_NOTHROW(box.enqueue(wp(6)));
  // Gaps are allowed: the producer may have been restarted around a
  // different journal.
  CHECK_NOTHROW(box.enqueue(wp(100)));
}

TEST_CASE("torn tail is dropped on restart") {
  TempDir dir("outbox");
  {
    Outbox box(dir.str());
    for (std::uint64_t s = 1; s <= 3; ++s) box.enqueue(wp(s));
  }
  {
    std::ofstream f(dir.str() + "/outbox.log",
                    std::ios::binary | std::ios::app);
    const char garbage[] = {0x40, 0x00, 0x00, 0x00, 0x12};
    f.write(garbage, sizeof(garbage));
  }
  Outbox again(dir.str());
  CHECK(again.size() == 3);
  CHECK(again.last_seq() == 3);
  // The file was truncated back to intact frames, so appending still works.
  CHECK(again.enqueue(wp(4)));
  Outbox third(dir.str());
  CHECK(third.size() == 4);
}

TEST_CASE("storage failure overflows to memory and recovers") {
  namespace fs = std::filesystem;
  TempDir dir("outbox");
  std::string log = dir.str() + "/outbox.log";
  Outbox box(dir.str());
  CHECK(box.enqueue(wp(1)));

  // Break the backing file: remove it and occupy the name with a
  // directory, then invalidate the held descriptor.
  fs::remove(log);
  fs::create_directory(log);
  for (const auto& fd_entry : fs::directory_iterator("/proc/self/fd")) {
    std::error_code ec;
    auto target = fs::read_symlink(fd_entry.path(), ec);
    if (!ec && target.string().find("outbox.log") != std::string::npos) {
      ::close(std::atoi(fd_entry.path().filename().c_str()));
    }
  }

  CHECK_FALSE(box.enqueue(wp(2)));  // surfaced, but accepted in memory
  CHECK_FALSE(box.enqueue(wp(3)));
  CHECK(box.overflow_count() == 2);
  CHECK(box.pending_count() == 3);  // sender still sees everything

  // Storage comes back; the next enqueue flushes the backlog.
  fs::remove(log);
  CHECK(box.enqueue(wp(4)));
  CHECK(box.overflow_count() == 0);

  Outbox again(dir.str());
  CHECK(again.size() == 3);  // 2, 3, 4 (record 1's bytes died with the file)
  CHECK(again.pending().front().seq == 2);
}

TEST_CASE("ack watermark survives restart and never regresses") {
  TempDir dir("outbox");
  {
    Outbox box(dir.str());
    for (std::uint64_t s = 1; s <= 4; ++s) box.enqueue(wp(s));
    box.ack(3);
    box.ack(1);  // stale ack: ignored
    CHECK(box.watermark() == 3);
  }
  Outbox again(dir.str());
  CHECK(again.watermark() == 3);
  CHECK(again.pending_count() == 1);
}
