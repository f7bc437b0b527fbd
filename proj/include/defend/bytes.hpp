// Copyright 2026 the defend developers. Licensed
// under the Apache License, Version 2.0. See the COPYING file at the root
// of this distribution or at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "defend/errors.hpp"

namespace defend {

using Bytes = std::vector<uint8_t>;
using ByteView = std::span<const uint8_t>;
using Digest32 = std::array<uint8_t, 32>;
using Seed32 = std::array<uint8_t, 32>;

inline ByteView as_bytes(const std::string& s) {
  return {reinterpret_cast<const uint8_t*>(s.data()), s.size()};
}

inline std::string to_hex(ByteView in) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(in.size() * 2);
  for (uint8_t b : in) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0f]);
  }
  return out;
}

inline std::string to_hex(const Digest32& d) { return to_hex(ByteView{d.data(), d.size()}); }

inline int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

inline Bytes from_hex(std::string_view in) {
  if (in.size() % 2 != 0) fail(Errc::malformed_id, "odd hex length");
  Bytes out;
  out.reserve(in.size() / 2);
  for (size_t i = 0; i < in.size(); i += 2) {
    int hi = hex_nibble(in[i]);
    int lo = hex_nibble(in[i + 1]);
    if (hi < 0 || lo < 0) fail(Errc::malformed_id, "invalid hex digit");
    out.push_back(static_cast<uint8_t>((hi << 4) | lo));
  }
  return out;
}

inline Digest32 digest_from_hex(std::string_view in) {
  Bytes raw = from_hex(in);
  if (raw.size() != 32) fail(Errc::malformed_id, "digest must be 32 bytes");
  Digest32 d;
  std::memcpy(d.data(), raw.data(), 32);
  return d;
}

// Canonical byte encoding: big-endian fixed-width integers, u32-length-prefixed
// byte strings. The exact layouts are documented in docs/FORMATS.md.
class Encoder {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }

  void u32(uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) buf_.push_back(static_cast<uint8_t>(v >> shift));
  }

  void u64(uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) buf_.push_back(static_cast<uint8_t>(v >> shift));
  }

  void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }
  void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }

  void raw(ByteView v) { buf_.insert(buf_.end(), v.begin(), v.end()); }

  void bytes(ByteView v) {
    u32(static_cast<uint32_t>(v.size()));
    raw(v);
  }

  void str(std::string_view s) { bytes({reinterpret_cast<const uint8_t*>(s.data()), s.size()}); }

  const Bytes& view() const { return buf_; }
  Bytes take() { return std::move(buf_); }

 private:
  Bytes buf_;
};

class Decoder {
 public:
  explicit Decoder(ByteView in) : in_(in) {}

  uint8_t u8() {
    need(1);
    return in_[pos_++];
  }

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | in_[pos_++];
    return v;
  }

  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | in_[pos_++];
    return v;
  }

  int32_t i32() { return static_cast<int32_t>(u32()); }
  int64_t i64() { return static_cast<int64_t>(u64()); }

  Bytes bytes() {
    uint32_t n = u32();
    need(n);
    Bytes out(in_.begin() + static_cast<ptrdiff_t>(pos_), in_.begin() + static_cast<ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }

  std::string str() {
    Bytes b = bytes();
    return {b.begin(), b.end()};
  }

  Digest32 digest() {
    need(32);
    Digest32 d;
    std::memcpy(d.data(), in_.data() + pos_, 32);
    pos_ += 32;
    return d;
  }

  bool done() const { return pos_ == in_.size(); }
  size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(size_t n) const {
    if (pos_ + n > in_.size()) fail(Errc::truncated_file, "byte stream ends early");
  }

  ByteView in_;
  size_t pos_ = 0;
};

}  // namespace defend
