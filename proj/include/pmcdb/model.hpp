#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pmcdb/bytes.hpp"
#include "pmcdb/crypto.hpp"

namespace pmcdb {

using RecordId = std::uint64_t;
using Element = Bytes;

// Reserved filler for surplus dummy slots: elem_len bytes of 0xFF.
Element null_element(const SchemeParams& params);
bool is_null(ByteView element);

// Right-pads with 0x00 to elem_len; rejects longer input and the NULL sentinel.
Element pad_element(std::string_view text, const SchemeParams& params);
// Inverse of pad_element for display; NULL renders as "NULL".
std::string display_element(ByteView element);

struct Record {
  std::vector<Element> elements;
  bool real = true;

  bool operator==(const Record&) const = default;
  auto operator<=>(const Record&) const = default;
};

Record make_record(const std::vector<std::string>& cells, const SchemeParams& params);
void validate_record(const Record& rcd, const SchemeParams& params);

// e*_1 || ... || e*_F || tag, each e* elem_len bytes.
struct EncryptedRecord {
  Bytes bytes;

  ByteView field(std::size_t f, const SchemeParams& p) const {
    return ByteView(bytes).subspan(f * p.elem_len, p.elem_len);
  }
  ByteView tag(const SchemeParams& p) const {
    return ByteView(bytes).subspan(p.field_count * p.elem_len, p.tag_len());
  }
  MutableByteView tag_mut(const SchemeParams& p) {
    return MutableByteView(bytes).subspan(p.field_count * p.elem_len, p.tag_len());
  }
  bool operator==(const EncryptedRecord&) const = default;
};

// n_1 || ... || n_F || n_{F+1}; same layout as EncryptedRecord.
struct NonceView {
  static ByteView field(ByteView nonce, std::size_t f, const SchemeParams& p) {
    return nonce.subspan(f * p.elem_len, p.elem_len);
  }
  static ByteView tag(ByteView nonce, const SchemeParams& p) {
    return nonce.subspan(p.field_count * p.elem_len, p.tag_len());
  }
};

struct NonceEntry {
  Bytes seed;
  Bytes nonce;
  bool operator==(const NonceEntry&) const = default;
};

enum class QueryType : std::uint8_t { Select = 0, Delete = 1 };

struct Query {
  QueryType type = QueryType::Select;
  std::size_t field = 0;  // 0-based
  Element element;
};

struct EncryptedQuery {
  QueryType type = QueryType::Select;
  std::size_t field = 0;
  Bytes e_star;
};

struct GroupKey {
  std::size_t field = 0;
  GroupId group;
  auto operator<=>(const GroupKey&) const = default;
  bool operator==(const GroupKey&) const = default;
};

std::string to_string(const GroupKey& key);

// Plaintext of a group's metadata ciphertext.
struct GroupMeta {
  std::set<Element> elements;  // E_{f,g}, NULL excluded
  std::uint64_t tau = 0;       // τ_{f,g}
  bool operator==(const GroupMeta&) const = default;
};

Bytes serialize_meta(const GroupMeta& meta);
GroupMeta parse_meta(ByteView bytes);
Bytes seal_meta(const GroupMeta& meta, ByteView s1, Rng& rng);
GroupMeta open_meta(ByteView meta_ct, ByteView s1);

struct GroupEntry {
  std::vector<RecordId> il;
  Bytes meta_ct;
  bool operator==(const GroupEntry&) const = default;
};

using GroupDirectory = std::map<GroupKey, GroupEntry>;

// Group of `field` whose id has the smallest Hamming distance to `group`;
// ties go to the smallest id bytewise. An exact hit is returned as-is.
std::optional<GroupKey> closest_group(const GroupDirectory& gdb, std::size_t field,
                                      const GroupId& group);

// Public scheme description: everything but the keys.
struct Scheme {
  SchemeParams params;
  std::shared_ptr<const GroupEncoder> encoder;

  GroupId group_of(ByteView s1, std::size_t field, ByteView element) const {
    return encoder->encode(s1, field, element);
  }
};

// The three persistent stores. edb and ndb are position-aligned.
struct EncryptedStore {
  std::vector<EncryptedRecord> edb;
  std::vector<NonceEntry> ndb;
  GroupDirectory gdb;
};

struct Witness {
  Bytes w;
  Bytes t;
};

struct SearchEntry {
  RecordId id = 0;
  EncryptedRecord record;
  Bytes t;
};

struct SearchResult {
  std::vector<SearchEntry> entries;
};

// Tag of a searched record as returned for delete queries.
struct SearchedTag {
  RecordId id = 0;
  Bytes tag;
  Bytes t;
};

struct PlainDatabase {
  std::size_t field_count = 0;
  std::vector<Record> rows;
  // Optional elements known ahead of time (lets an empty table be grouped).
  std::vector<std::set<Element>> predefined;
};

enum class CensusScope { RealOnly, AllRows };

// Occurrence counts of field f. NULL cells are never counted.
std::map<Element, std::uint64_t> occurrence_census(const PlainDatabase& db, std::size_t field,
                                                   CensusScope scope = CensusScope::RealOnly);

// U_f: observed non-NULL elements of real rows plus predefined ones.
std::set<Element> universe(const PlainDatabase& db, std::size_t field);

// Real tags are (H_{s1}(S) || S) ^ n_tag for fresh S; dummy tags are uniform.
Bytes tag_make(bool real, ByteView n_tag, ByteView s1, const SchemeParams& params, Rng& rng);
bool tag_check(ByteView tag, ByteView n_tag, ByteView s1, const SchemeParams& params);

}  // namespace pmcdb
