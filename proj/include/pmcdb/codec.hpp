#pragma once

// Big-endian integers and 4-byte length-prefixed byte strings.

#include <cstdint>
#include <string>
#include <string_view>

#include "pmcdb/bytes.hpp"

namespace pmcdb::wire {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void bytes(ByteView b);  // length-prefixed
  void raw(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void str(std::string_view s);

  const Bytes& data() const { return out_; }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

// Every read is bounds-checked; overruns throw a protocol error.
class Reader {
 public:
  explicit Reader(ByteView in) : in_(in) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  Bytes bytes();
  Bytes raw(std::size_t n);
  std::string str();

  std::size_t remaining() const { return in_.size() - pos_; }
  void expect_end() const;

 private:
  ByteView take(std::size_t n);
  ByteView in_;
  std::size_t pos_ = 0;
};

}  // namespace pmcdb::wire
