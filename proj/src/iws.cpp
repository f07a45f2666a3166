#include "pmcdb/iws.hpp"

#include <algorithm>

#include "pmcdb/error.hpp"

namespace pmcdb {

IwsState::IwsState(SchemeParams params, Bytes s2, GroupDirectory gdb, std::vector<NonceEntry> ndb,
                   Rng rng)
    : params_(params), s2_(std::move(s2)), gdb_(std::move(gdb)), ndb_(std::move(ndb)),
      rng_(std::move(rng)) {
  rebuild_locator();
}

void IwsState::replace(GroupDirectory gdb, std::vector<NonceEntry> ndb) {
  gdb_ = std::move(gdb);
  ndb_ = std::move(ndb);
  rebuild_locator();
}

void IwsState::rebuild_locator() {
  for (const auto& n : ndb_) {
    if (n.seed.size() != params_.seed_len() || n.nonce.size() != params_.nonce_len()) {
      throw_protocol("NDB entry length mismatch");
    }
  }
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  locator_.assign(params_.field_count, std::vector<Slot>(ndb_.size(), Slot{{}, kUnset}));
  for (const auto& [key, entry] : gdb_) {
    if (key.field >= params_.field_count) throw_protocol("group field out of range");
    for (std::size_t i = 0; i < entry.il.size(); ++i) {
      const RecordId id = entry.il[i];
      if (id >= ndb_.size()) throw_protocol("index list id beyond NDB");
      auto& slot = locator_[key.field][id];
      if (slot.index != kUnset) {
        throw_protocol("record " + std::to_string(id) + " listed twice in field " +
                       std::to_string(key.field));
      }
      slot = Slot{key, i};
    }
  }
  for (std::size_t f = 0; f < params_.field_count; ++f) {
    for (RecordId id = 0; id < ndb_.size(); ++id) {
      if (locator_[f][id].index == kUnset) {
        throw_protocol("record " + std::to_string(id) + " missing from field " +
                       std::to_string(f) + " index lists");
      }
    }
  }
}

void IwsState::admit(const std::string& user) const {
  if (revoked_.contains(user)) {
    throw Error(ErrorKind::Revoked, "user '" + user + "' is revoked", Role::Iws);
  }
}

GroupKey IwsState::resolve(std::size_t field, const GroupId& group) const {
  if (field >= params_.field_count) throw_protocol("field out of range");
  auto key = closest_group(gdb_, field, group);
  if (!key) throw_protocol("no groups in field " + std::to_string(field));
  return *key;
}

WitnessSet IwsState::nonce_blind(std::size_t field, ByteView eta, const GroupId& group) const {
  if (eta.size() != params_.elem_len) throw_protocol("eta length mismatch");
  WitnessSet out;
  out.key = resolve(field, group);
  out.il = gdb_.at(out.key).il;
  std::sort(out.il.begin(), out.il.end());
  out.en.reserve(out.il.size());
  Bytes block(params_.elem_len);
  for (auto id : out.il) {
    const auto& entry = ndb_[id];
    auto n_f = NonceView::field(entry.nonce, field, params_);
    for (std::size_t i = 0; i < block.size(); ++i) block[i] = n_f[i] ^ eta[i];
    out.en.push_back({public_hash(block, params_.witness_len), xor_bytes(eta, entry.seed)});
  }
  return out;
}

ShufflePlan IwsState::pre_shuffle(const GroupKey& key) {
  auto it = gdb_.find(key);
  if (it == gdb_.end()) throw_protocol("unknown group " + to_string(key));
  if (it->second.il.empty()) return {};
  return pre_shuffle_ids(it->second.il, rng_.key32());
}

ShufflePlan IwsState::pre_shuffle_ids(const std::vector<RecordId>& il, const ShuffleSeed& seed) {
  for (auto id : il) {
    if (id >= ndb_.size()) throw_protocol("unknown record id " + std::to_string(id));
  }
  ShufflePlan plan;
  // The stored order follows earlier shuffles; the plan travels to the SSS,
  // so it must not carry that order.
  plan.il = il;
  std::sort(plan.il.begin(), plan.il.end());
  plan.il_prime = prp_shuffle(seed, plan.il);
  const std::size_t n = il.size();

  std::vector<NonceEntry> old;
  old.reserve(n);
  for (auto id : plan.il) old.push_back(ndb_[id]);
  plan.nn.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    NonceEntry fresh;
    fresh.seed = rng_.bytes(params_.seed_len());
    fresh.nonce = prg_expand(s2_, fresh.seed, params_);
    plan.nn.push_back(xor_bytes(old[i].nonce, fresh.nonce));
    ndb_[plan.il_prime[i]] = std::move(fresh);
  }

  // every field's index lists follow the records: id il[i] becomes il_prime[i]
  for (std::size_t f = 0; f < params_.field_count; ++f) {
    std::vector<Slot> slots;
    slots.reserve(n);
    // plan.il, not il: il may alias an index list rewritten below
    for (auto id : plan.il) slots.push_back(locator_[f][id]);
    for (std::size_t i = 0; i < n; ++i) {
      gdb_.at(slots[i].key).il[slots[i].index] = plan.il_prime[i];
      locator_[f][plan.il_prime[i]] = slots[i];
    }
  }
  return plan;
}

std::set<GroupKey> IwsState::register_insert(
    const std::vector<NonceEntry>& entries, const std::vector<std::vector<GroupId>>& groups,
    const std::vector<RecordId>& ids, const std::vector<std::pair<GroupKey, Bytes>>& metas) {
  if (entries.size() != ids.size() || groups.size() != ids.size()) {
    throw_protocol("insert registration sizes differ");
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] != ndb_.size() + i) {
      throw_protocol("insert id " + std::to_string(ids[i]) + " collides with NDB layout");
    }
    if (groups[i].size() != params_.field_count) throw_protocol("group vector length mismatch");
    if (entries[i].seed.size() != params_.seed_len() ||
        entries[i].nonce.size() != params_.nonce_len()) {
      throw_protocol("inserted nonce entry length mismatch");
    }
  }
  for (const auto& [key, ct] : metas) {
    if (!gdb_.contains(key)) throw_protocol("metadata for unknown group " + to_string(key));
  }

  std::set<GroupKey> touched;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ndb_.push_back(entries[i]);
    for (auto& per_field : locator_) per_field.emplace_back();
    for (std::size_t f = 0; f < params_.field_count; ++f) {
      GroupKey key = resolve(f, groups[i][f]);
      auto& il = gdb_.at(key).il;
      locator_[f][ids[i]] = Slot{key, il.size()};
      il.push_back(ids[i]);
      touched.insert(key);
    }
  }
  for (const auto& [key, ct] : metas) gdb_.at(key).meta_ct = ct;
  return touched;
}

MetaReply IwsState::fetch_group_meta(std::size_t field, const GroupId& group) const {
  GroupKey key = resolve(field, group);
  return {key, gdb_.at(key).meta_ct};
}

}  // namespace pmcdb
