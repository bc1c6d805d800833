#pragma once

// Little-endian encoding helpers shared by the model and dataset containers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "faultpred/errors.hpp"

namespace faultpred::binio {

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void f64s(std::span<const double> vs) {
    for (double v : vs) f64(v);
  }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void raw(std::string_view s) { buf_.append(s); }

  /// Appends an FNV-1a digest of everything written so far.
  void seal() { u64(digest(buf_)); }

  const std::string& bytes() const noexcept { return buf_; }

  static std::uint64_t digest(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string_view bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(get(8)); }
  double f64() { return std::bit_cast<double>(get(8)); }
  void f64s(std::span<double> out) {
    for (double& v : out) v = f64();
  }
  std::string str(std::size_t max_len = 4096) {
    const auto n = u32();
    if (n > max_len) fail("string length " + std::to_string(n) + " is implausible");
    return std::string(take(n));
  }
  std::string_view raw(std::size_t n) { return take(n); }

  /// Bytes still unread.
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  /// Checks the trailing digest written by Writer::seal.
  void verify_seal() {
    const std::size_t body = pos_;
    const auto stored = u64();
    if (stored != Writer::digest(bytes_.substr(0, body))) fail("checksum mismatch");
    if (remaining() != 0) fail("trailing bytes after checksum");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError(what_ + ": corrupt file (" + msg + ")");
  }

 private:
  std::string_view take(std::size_t n) {
    if (n > remaining()) fail("truncated");
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint64_t get(int n) {
    const auto s = take(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace faultpred::binio
