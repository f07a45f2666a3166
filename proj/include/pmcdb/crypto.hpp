#pragma once

// Stateless primitives shared by every role. All functions are pure in their
// inputs and safe to call concurrently; only Rng carries state.

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pmcdb/bytes.hpp"

namespace pmcdb {

struct SchemeParams {
  std::size_t field_count = 1;   // F
  std::size_t elem_len = 16;     // |e| in bytes, positive multiple of the AES block
  std::size_t hash_len = 32;     // |H|, at most 32 (truncated HMAC-SHA256)
  std::size_t witness_len = 32;  // |w|, at most 32 (truncated SHA-256)
  std::size_t key_bits = 128;    // k, 128 or 256
  std::size_t lambda = 1;        // minimum distinct elements per group (advisory)

  std::size_t seed_len() const { return elem_len; }
  std::size_t tag_len() const { return hash_len + elem_len; }
  std::size_t nonce_len() const { return field_count * elem_len + tag_len(); }
  std::size_t record_len() const { return nonce_len(); }
  std::size_t key_len() const { return key_bits / 8; }

  // Throws ParameterError on any violated constraint.
  void validate() const;
};

// s1 encrypts records and queries; s2 is shared with the IWS for nonces.
struct SecretKeys {
  Bytes s1;
  Bytes s2;

  void validate(const SchemeParams& params) const;
};

// Deterministic AES-256-CTR byte stream when seeded, OS entropy otherwise.
class Rng {
 public:
  Rng();  // fresh key from the OS
  explicit Rng(ByteView key);
  static Rng seeded(std::uint64_t seed);

  Rng(Rng&&) noexcept;
  Rng& operator=(Rng&&) noexcept;
  Rng(const Rng&) = delete;
  Rng& operator=(const Rng&) = delete;
  ~Rng();

  void fill(MutableByteView out);
  Bytes bytes(std::size_t n);
  std::uint64_t next_u64();
  // Uniform in [0, bound), rejection-sampled. bound must be > 0.
  std::uint64_t uniform(std::uint64_t bound);
  std::array<std::uint8_t, 32> key32();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SecretKeys generate_keys(const SchemeParams& params, Rng& rng);

// Keyed hash H_{s1}: HMAC-SHA256 truncated to hash_len.
Bytes keyed_hash(ByteView key, ByteView message, std::size_t hash_len = 32);
// Public hash H': SHA-256 truncated to witness_len.
Bytes public_hash(ByteView message, std::size_t witness_len = 32);
void public_hash_into(ByteView message, MutableByteView out);

// Nonce generator Gamma_{s2}(seed): AES-CTR keystream of nonce_len bytes.
Bytes prg_expand(ByteView s2, ByteView seed, const SchemeParams& params);

// Deterministic element cipher: AES-ECB over elem_len bytes.
Bytes det_encrypt(ByteView s1, ByteView element, const SchemeParams& params);
Bytes det_decrypt(ByteView s1, ByteView block, const SchemeParams& params);

// Semantically secure cipher for group metadata: AES-GCM under a subkey of s1.
// Layout: 12-byte nonce || ciphertext || 16-byte tag.
Bytes meta_encrypt(ByteView s1, ByteView plaintext, Rng& rng);
Bytes meta_decrypt(ByteView s1, ByteView ciphertext);

using ShuffleSeed = std::array<std::uint8_t, 32>;

// Fisher-Yates over ids driven by a stream keyed with seed. Rejects duplicates.
std::vector<std::uint64_t> prp_shuffle(const ShuffleSeed& seed, std::vector<std::uint64_t> ids);

// ---------------------------------------------------------------------------
// Group encoding

struct GroupId {
  Bytes bits;  // big-endian, ceil(b/8) bytes for a b-bit identifier
  auto operator<=>(const GroupId&) const = default;
  bool operator==(const GroupId&) const = default;
};

std::string to_string(const GroupId& g);

// Least significant b bits of keyed_hash(s1, e).
GroupId group_encode(ByteView s1, ByteView element, std::size_t bits);

class GroupEncoder {
 public:
  virtual ~GroupEncoder() = default;
  virtual GroupId encode(ByteView s1, std::size_t field, ByteView element) const = 0;
  virtual std::string kind() const = 0;
};

class KeyedGroupEncoder final : public GroupEncoder {
 public:
  explicit KeyedGroupEncoder(std::size_t bits);
  GroupId encode(ByteView s1, std::size_t field, ByteView element) const override;
  std::string kind() const override { return "keyed"; }
  std::size_t bits() const { return bits_; }

 private:
  std::size_t bits_;
};

// Integer elements rendered as decimal text; group = value mod modulus.
// Non-numeric elements (including NULL) land in the group `modulus`.
class ModuloGroupEncoder final : public GroupEncoder {
 public:
  explicit ModuloGroupEncoder(std::uint64_t modulus);
  GroupId encode(ByteView s1, std::size_t field, ByteView element) const override;
  std::string kind() const override { return "modulo"; }
  std::uint64_t modulus() const { return modulus_; }

 private:
  std::uint64_t modulus_;
};

// Explicit (field, element) -> group table; unmapped elements map to 0xFF.
class FixedGroupEncoder final : public GroupEncoder {
 public:
  using Table = std::map<std::pair<std::size_t, Bytes>, std::uint8_t>;
  explicit FixedGroupEncoder(Table table) : table_(std::move(table)) {}
  GroupId encode(ByteView s1, std::size_t field, ByteView element) const override;
  std::string kind() const override { return "fixed"; }
  const Table& table() const { return table_; }

 private:
  Table table_;
};

}  // namespace pmcdb
