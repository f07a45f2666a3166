#include "pmcdb/sss.hpp"

#include "pmcdb/error.hpp"

namespace pmcdb {

SssState::SssState(SchemeParams params, std::vector<EncryptedRecord> edb)
    : params_(params), edb_(std::move(edb)) {
  for (const auto& r : edb_) {
    if (r.bytes.size() != params_.record_len()) throw_parameter("EDB record length mismatch");
  }
}

void SssState::admit(const std::string& user) const {
  if (revoked_.contains(user)) {
    throw Error(ErrorKind::Revoked, "user '" + user + "' is revoked", Role::Sss);
  }
}

void SssState::check_ids(const std::vector<RecordId>& il) const {
  for (auto id : il) {
    if (id >= edb_.size()) throw_protocol("record id " + std::to_string(id) + " out of range");
  }
}

StagedSearch SssState::stage(const EncryptedQuery& eq, const std::vector<RecordId>& il) const {
  if (eq.field >= params_.field_count) throw_protocol("query field out of range");
  if (eq.e_star.size() != params_.elem_len) throw_protocol("query element length mismatch");
  check_ids(il);
  StagedSearch staged{eq, il, {}, 0, 0};
  staged.digests.reserve(il.size());
  Bytes block(params_.elem_len);
  for (auto id : il) {
    auto field = edb_[id].field(eq.field, params_);
    for (std::size_t i = 0; i < block.size(); ++i) block[i] = field[i] ^ eq.e_star[i];
    staged.digests.push_back(public_hash(block, params_.witness_len));
    ++staged.hash_calls;
  }
  return staged;
}

SearchOutcome SssState::finish(StagedSearch& staged, const std::vector<Witness>& en) const {
  if (en.size() != staged.il.size()) {
    throw_protocol("witness set has " + std::to_string(en.size()) + " entries for " +
                   std::to_string(staged.il.size()) + " ids");
  }
  SearchOutcome out;
  for (std::size_t i = 0; i < staged.il.size(); ++i) {
    ++staged.comparisons;
    if (staged.digests[i] == en[i].w) {
      const RecordId id = staged.il[i];
      out.sr.entries.push_back({id, edb_[id], en[i].t});
      out.matched.push_back(id);
    }
  }
  return out;
}

SearchOutcome SssState::search(const EncryptedQuery& eq, const std::vector<RecordId>& il,
                               const std::vector<Witness>& en) const {
  if (en.size() != il.size()) throw_protocol("witness set size differs from index list");
  auto staged = stage(eq, il);
  return finish(staged, en);
}

std::vector<SearchedTag> SssState::searched_tags(const std::vector<RecordId>& il,
                                                 const std::vector<Witness>& en) const {
  if (en.size() != il.size()) throw_protocol("witness set size differs from index list");
  check_ids(il);
  std::vector<SearchedTag> out;
  out.reserve(il.size());
  for (std::size_t i = 0; i < il.size(); ++i) {
    auto tag = edb_[il[i]].tag(params_);
    out.push_back({il[i], Bytes(tag.begin(), tag.end()), en[i].t});
  }
  return out;
}

std::vector<RecordId> SssState::append(std::vector<EncryptedRecord> ercds) {
  for (const auto& r : ercds) {
    if (r.bytes.size() != params_.record_len()) throw_protocol("inserted record length mismatch");
  }
  std::vector<RecordId> ids;
  ids.reserve(ercds.size());
  for (auto& r : ercds) {
    ids.push_back(edb_.size());
    edb_.push_back(std::move(r));
  }
  return ids;
}

std::vector<EncryptedRecord> SssState::records(const std::vector<RecordId>& il) const {
  check_ids(il);
  std::vector<EncryptedRecord> out;
  out.reserve(il.size());
  for (auto id : il) out.push_back(edb_[id]);
  return out;
}

void SssState::apply_shuffle(const std::vector<std::pair<RecordId, EncryptedRecord>>& shuffled) {
  for (const auto& [id, r] : shuffled) {
    if (id >= edb_.size()) throw_protocol("shuffled id out of range");
    if (r.bytes.size() != params_.record_len()) throw_protocol("shuffled record length mismatch");
  }
  for (const auto& [id, r] : shuffled) edb_[id] = r;
}

void SssState::apply_tags(const std::vector<std::pair<RecordId, Bytes>>& updates) {
  for (const auto& [id, tag] : updates) {
    if (id >= edb_.size()) throw_protocol("tag update id out of range");
    if (tag.size() != params_.tag_len()) throw_protocol("tag length mismatch");
  }
  for (const auto& [id, tag] : updates) {
    auto dst = edb_[id].tag_mut(params_);
    std::copy(tag.begin(), tag.end(), dst.begin());
  }
}

}  // namespace pmcdb
