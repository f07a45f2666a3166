#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pmcdb {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using MutableByteView = std::span<std::uint8_t>;

inline ByteView view(const Bytes& b) { return {b.data(), b.size()}; }

Bytes to_bytes(std::string_view s);
std::string to_string(ByteView b);

// a ^ b; throws ParameterError when lengths differ.
Bytes xor_bytes(ByteView a, ByteView b);
void xor_into(MutableByteView dst, ByteView src);

std::string to_hex(ByteView b);
Bytes from_hex(std::string_view hex);

// Number of set bits in a ^ b, shorter operand zero-extended on the left.
std::size_t hamming_distance(ByteView a, ByteView b);

bool constant_time_equal(ByteView a, ByteView b);

}  // namespace pmcdb
