#include "pmcdb/model.hpp"

#include <algorithm>

#include "pmcdb/error.hpp"
#include "pmcdb/codec.hpp"

namespace pmcdb {

Element null_element(const SchemeParams& params) { return Element(params.elem_len, 0xFF); }

bool is_null(ByteView element) {
  return !element.empty() &&
         std::all_of(element.begin(), element.end(), [](std::uint8_t c) { return c == 0xFF; });
}

Element pad_element(std::string_view text, const SchemeParams& params) {
  if (text.size() > params.elem_len) {
    throw_parameter("element '" + std::string(text) + "' exceeds " +
                    std::to_string(params.elem_len) + " bytes");
  }
  Element e(params.elem_len, 0x00);
  std::copy(text.begin(), text.end(), e.begin());
  if (is_null(e)) throw_parameter("element collides with the NULL sentinel");
  return e;
}

std::string display_element(ByteView element) {
  if (is_null(element)) return "NULL";
  std::size_t len = element.size();
  while (len > 0 && element[len - 1] == 0) --len;
  return std::string(element.begin(), element.begin() + static_cast<std::ptrdiff_t>(len));
}

Record make_record(const std::vector<std::string>& cells, const SchemeParams& params) {
  if (cells.size() != params.field_count) {
    throw_parameter("record has " + std::to_string(cells.size()) + " fields, expected " +
                    std::to_string(params.field_count));
  }
  Record r;
  r.elements.reserve(cells.size());
  for (const auto& c : cells) r.elements.push_back(pad_element(c, params));
  return r;
}

void validate_record(const Record& rcd, const SchemeParams& params) {
  if (rcd.elements.size() != params.field_count) throw_parameter("record field count mismatch");
  for (const auto& e : rcd.elements) {
    if (e.size() != params.elem_len) throw_parameter("record element length mismatch");
  }
}

std::string to_string(const GroupKey& key) {
  return "(" + std::to_string(key.field) + "," + to_string(key.group) + ")";
}

std::optional<GroupKey> closest_group(const GroupDirectory& gdb, std::size_t field,
                                      const GroupId& group) {
  GroupKey probe{field, group};
  if (gdb.contains(probe)) return probe;
  std::optional<GroupKey> best;
  std::size_t best_distance = 0;
  for (auto it = gdb.lower_bound(GroupKey{field, GroupId{}}); it != gdb.end(); ++it) {
    if (it->first.field != field) break;
    const std::size_t d = hamming_distance(it->first.group.bits, group.bits);
    // strict < keeps the first (smallest) id among equals
    if (!best || d < best_distance) {
      best = it->first;
      best_distance = d;
    }
  }
  return best;
}

Bytes serialize_meta(const GroupMeta& meta) {
  wire::Writer w;
  w.u64(meta.tau);
  w.u32(static_cast<std::uint32_t>(meta.elements.size()));
  for (const auto& e : meta.elements) w.bytes(e);
  return w.take();
}

GroupMeta parse_meta(ByteView bytes) {
  wire::Reader r(bytes);
  GroupMeta meta;
  meta.tau = r.u64();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) meta.elements.insert(r.bytes());
  r.expect_end();
  return meta;
}

Bytes seal_meta(const GroupMeta& meta, ByteView s1, Rng& rng) {
  return meta_encrypt(s1, serialize_meta(meta), rng);
}

GroupMeta open_meta(ByteView meta_ct, ByteView s1) { return parse_meta(meta_decrypt(s1, meta_ct)); }

std::map<Element, std::uint64_t> occurrence_census(const PlainDatabase& db, std::size_t field,
                                                   CensusScope scope) {
  if (field >= db.field_count) throw_parameter("field index out of range");
  std::map<Element, std::uint64_t> counts;
  for (const auto& row : db.rows) {
    if (scope == CensusScope::RealOnly && !row.real) continue;
    const auto& e = row.elements.at(field);
    if (is_null(e)) continue;
    ++counts[e];
  }
  return counts;
}

std::set<Element> universe(const PlainDatabase& db, std::size_t field) {
  std::set<Element> u;
  for (const auto& [e, n] : occurrence_census(db, field)) u.insert(e);
  if (field < db.predefined.size()) {
    for (const auto& e : db.predefined[field]) {
      if (!is_null(e)) u.insert(e);
    }
  }
  return u;
}

Bytes tag_make(bool real, ByteView n_tag, ByteView s1, const SchemeParams& params, Rng& rng) {
  if (n_tag.size() != params.tag_len()) throw_parameter("tag nonce length mismatch");
  if (!real) return rng.bytes(params.tag_len());
  Bytes s = rng.bytes(params.elem_len);
  Bytes tag = keyed_hash(s1, s, params.hash_len);
  tag.insert(tag.end(), s.begin(), s.end());
  xor_into(tag, n_tag);
  return tag;
}

bool tag_check(ByteView tag, ByteView n_tag, ByteView s1, const SchemeParams& params) {
  if (tag.size() != params.tag_len() || n_tag.size() != params.tag_len()) {
    throw_parameter("tag length mismatch");
  }
  Bytes plain = xor_bytes(tag, n_tag);
  ByteView left = ByteView(plain).first(params.hash_len);
  ByteView right = ByteView(plain).subspan(params.hash_len);
  return constant_time_equal(left, keyed_hash(s1, right, params.hash_len));
}

}  // namespace pmcdb
