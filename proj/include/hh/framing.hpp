#pragma once

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hh {

// Record framing for the append-only logs: [u32 length][u32 crc32][payload],
// little-endian, one frame per record. A frame whose bytes run out or whose
// final-frame checksum fails is a torn tail and gets truncated away on load;
// a checksum failure with more data behind it is hard corruption.

namespace detail {
inline void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline std::uint32_t get_u32(const char* p) {
  auto b = [&](int i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])); };
  return b(0) | (b(1) << 8) | (b(2) << 16) | (b(3) << 24);
}

inline std::uint32_t payload_crc(const std::string& payload) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
              static_cast<uInt>(payload.size())));
}
}  // namespace detail

class StorageError : public std::runtime_error {
 public:
  explicit StorageError(const std::string& what) : std::runtime_error(what) {}
};

class CorruptLogError : public std::runtime_error {
 public:
  CorruptLogError(const std::string& file, std::size_t offset,
                  const std::string& why)
      : std::runtime_error("corrupt record in " + file + " at offset " +
                           std::to_string(offset) + ": " + why),
        file_(file),
        offset_(offset) {}
  const std::string& file() const { return file_; }
  std::size_t offset() const { return offset_; }

 private:
  std::string file_;
  std::size_t offset_;
};

struct FrameScan {
  std::vector<std::string> records;
  std::vector<std::size_t> offsets;  // file offset of each record's frame
  bool torn_tail = false;      // trailing partial frame was dropped
  std::size_t good_bytes = 0;  // file size once any torn tail is removed
};

// Reads every intact frame. Throws CorruptLogError on mid-file corruption.
inline FrameScan scan_frames(const std::string& path) {
  FrameScan scan;
  std::ifstream in(path, std::ios::binary);
  if (!in) return scan;  // absent file: empty log
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  std::size_t off = 0;
  while (off < data.size()) {
    if (data.size() - off < 8) {
      scan.torn_tail = true;
      break;
    }
    std::uint32_t len = detail::get_u32(data.data() + off);
    std::uint32_t crc = detail::get_u32(data.data() + off + 4);
    if (len > (64u << 20)) {
      throw CorruptLogError(path, off, "implausible record length");
    }
    if (data.size() - off - 8 < len) {
      scan.torn_tail = true;
      break;
    }
    std::string payload = data.substr(off + 8, len);
    if (detail::payload_crc(payload) != crc) {
      if (off + 8 + len == data.size()) {
        scan.torn_tail = true;  // garbage only at the very end
        break;
      }
      throw CorruptLogError(path, off, "checksum mismatch");
    }
    scan.records.push_back(std::move(payload));
    scan.offsets.push_back(off);
    off += 8 + len;
  }
  scan.good_bytes = off;
  return scan;
}

// Appends frames with an fsync per append; open() truncates any torn tail
// found by a prior scan before further writes.
class FrameWriter {
 public:
  FrameWriter() = default;
  ~FrameWriter() { close(); }
  FrameWriter(const FrameWriter&) = delete;
  FrameWriter& operator=(const FrameWriter&) = delete;

  void open(const std::string& path, std::size_t truncate_to_bytes) {
    close();
    path_ = path;
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT, 0644);
    if (fd_ < 0) throw StorageError("cannot open " + path + ": " + std::strerror(errno));
    if (::ftruncate(fd_, static_cast<off_t>(truncate_to_bytes)) != 0) {
      throw StorageError("cannot truncate " + path + ": " + std::strerror(errno));
    }
    if (::lseek(fd_, 0, SEEK_END) < 0) {
      throw StorageError("cannot seek " + path + ": " + std::strerror(errno));
    }
  }

  bool is_open() const { return fd_ >= 0; }

  void append(const std::string& payload) {
    if (fd_ < 0) throw StorageError("writer is not open");
    std::string frame;
    frame.reserve(payload.size() + 8);
    detail::put_u32(frame, static_cast<std::uint32_t>(payload.size()));
    detail::put_u32(frame, detail::payload_crc(payload));
    frame += payload;
    std::size_t done = 0;
    while (done < frame.size()) {
      ssize_t n = ::write(fd_, frame.data() + done, frame.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw StorageError("write to " + path_ + " failed: " + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) {
      throw StorageError("fsync of " + path_ + " failed: " + std::strerror(errno));
    }
  }

  void close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  std::string path_;
  int fd_ = -1;
};

// Small atomically-replaced sidecar files (watermarks and the like).
inline void write_file_atomic(const std::string& path, const std::string& body) {
  std::string tmp = path + ".tmp";
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw StorageError("cannot open " + tmp + ": " + std::strerror(errno));
  std::size_t done = 0;
  while (done < body.size()) {
    ssize_t n = ::write(fd, body.data() + done, body.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw StorageError("write to " + tmp + " failed: " + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    throw StorageError("fsync of " + tmp + " failed: " + std::strerror(errno));
  }
  ::close(fd);
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw StorageError("rename " + tmp + " failed: " + std::strerror(errno));
  }
}

}  // namespace hh
