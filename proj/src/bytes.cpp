#include "pmcdb/bytes.hpp"

#include <algorithm>
#include <bit>

#include "pmcdb/error.hpp"

namespace pmcdb {

Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

std::string to_string(ByteView b) { return std::string(b.begin(), b.end()); }

Bytes xor_bytes(ByteView a, ByteView b) {
  if (a.size() != b.size()) {
    throw_parameter("xor of unequal lengths " + std::to_string(a.size()) + " and " +
                    std::to_string(b.size()));
  }
  Bytes out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] ^= b[i];
  return out;
}

void xor_into(MutableByteView dst, ByteView src) {
  if (dst.size() != src.size()) throw_parameter("xor of unequal lengths");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] ^= src[i];
}

std::string to_hex(ByteView b) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(b.size() * 2);
  for (auto c : b) {
    out.push_back(kDigits[c >> 4]);
    out.push_back(kDigits[c & 0xF]);
  }
  return out;
}

namespace {
int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
}  // namespace

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw_parameter("odd-length hex string");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = hex_value(hex[2 * i]);
    int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw_parameter("invalid hex digit");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

std::size_t hamming_distance(ByteView a, ByteView b) {
  const std::size_t n = std::max(a.size(), b.size());
  std::size_t bits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    // align on the right: index from the least significant end
    std::uint8_t x = i < a.size() ? a[a.size() - 1 - i] : 0;
    std::uint8_t y = i < b.size() ? b[b.size() - 1 - i] : 0;
    bits += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(x ^ y)));
  }
  return bits;
}

bool constant_time_equal(ByteView a, ByteView b) {
  if (a.size() != b.size()) return false;
  std::uint8_t acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc |= a[i] ^ b[i];
  return acc == 0;
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Protocol: return "protocol";
    case ErrorKind::Auth: return "auth";
    case ErrorKind::Revoked: return "revoked";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::User: return "user";
    case Role::Admin: return "admin";
    case Role::Sss: return "sss";
    case Role::Iws: return "iws";
    case Role::Rss: return "rss";
  }
  return "unknown";
}

void throw_parameter(const std::string& what) { throw Error(ErrorKind::Parameter, what); }
void throw_protocol(const std::string& what) { throw Error(ErrorKind::Protocol, what); }

}  // namespace pmcdb
