#include "pmcdb/codec.hpp"

#include "pmcdb/error.hpp"

namespace pmcdb::wire {

void Writer::u16(std::uint16_t v) {
  out_.push_back(static_cast<std::uint8_t>(v >> 8));
  out_.push_back(static_cast<std::uint8_t>(v));
}

void Writer::u32(std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
}

void Writer::u64(std::uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
}

void Writer::bytes(ByteView b) {
  if (b.size() > UINT32_MAX) throw_parameter("byte string too long for wire format");
  u32(static_cast<std::uint32_t>(b.size()));
  raw(b);
}

void Writer::str(std::string_view s) {
  bytes(ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

ByteView Reader::take(std::size_t n) {
  if (n > remaining()) {
    throw_protocol("truncated input: need " + std::to_string(n) + " bytes, have " +
                   std::to_string(remaining()));
  }
  ByteView v = in_.subspan(pos_, n);
  pos_ += n;
  return v;
}

std::uint8_t Reader::u8() { return take(1)[0]; }

std::uint16_t Reader::u16() {
  auto b = take(2);
  return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
}

std::uint32_t Reader::u32() {
  auto b = take(4);
  std::uint32_t v = 0;
  for (auto c : b) v = (v << 8) | c;
  return v;
}

std::uint64_t Reader::u64() {
  auto b = take(8);
  std::uint64_t v = 0;
  for (auto c : b) v = (v << 8) | c;
  return v;
}

Bytes Reader::bytes() {
  const std::uint32_t n = u32();
  auto b = take(n);
  return Bytes(b.begin(), b.end());
}

Bytes Reader::raw(std::size_t n) {
  auto b = take(n);
  return Bytes(b.begin(), b.end());
}

std::string Reader::str() {
  auto b = bytes();
  return std::string(b.begin(), b.end());
}

void Reader::expect_end() const {
  if (remaining() != 0) throw_protocol(std::to_string(remaining()) + " trailing bytes");
}

}  // namespace pmcdb::wire
