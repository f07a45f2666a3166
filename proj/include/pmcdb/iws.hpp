#pragma once

// Index and Witness Service: owns GDB and NDB. Never handles records or
// blinded query elements.

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "pmcdb/model.hpp"

namespace pmcdb {

struct WitnessSet {
  GroupKey key;  // the group actually served (after closest substitution)
  std::vector<RecordId> il;  // ascending
  std::vector<Witness> en;   // aligned with il
};

// Output of PreShuffle: record il[i] moves to il_prime[i] and is re-blinded
// with nn[i] = old nonce ^ new nonce.
struct ShufflePlan {
  std::vector<RecordId> il;
  std::vector<RecordId> il_prime;
  std::vector<Bytes> nn;
};

struct MetaReply {
  GroupKey key;
  Bytes meta_ct;
};

// Index and Witness Service.
class IwsState {
 public:
  IwsState(SchemeParams params, Bytes s2, GroupDirectory gdb, std::vector<NonceEntry> ndb,
           Rng rng = Rng());

  GroupKey resolve(std::size_t field, const GroupId& group) const;

  WitnessSet nonce_blind(std::size_t field, ByteView eta, const GroupId& group) const;
  ShufflePlan pre_shuffle(const GroupKey& key);
  // Lower-level form used by tests; ids must be one group's full index list.
  ShufflePlan pre_shuffle_ids(const std::vector<RecordId>& il, const ShuffleSeed& seed);

  // Returns the groups that received new ids.
  std::set<GroupKey> register_insert(const std::vector<NonceEntry>& entries,
                                     const std::vector<std::vector<GroupId>>& groups,
                                     const std::vector<RecordId>& ids,
                                     const std::vector<std::pair<GroupKey, Bytes>>& metas);
  MetaReply fetch_group_meta(std::size_t field, const GroupId& group) const;

  void revoke(const std::string& user) { revoked_.insert(user); }
  void admit(const std::string& user) const;

  const GroupDirectory& gdb() const { return gdb_; }
  const std::vector<NonceEntry>& ndb() const { return ndb_; }
  void replace(GroupDirectory gdb, std::vector<NonceEntry> ndb);
  const SchemeParams& params() const { return params_; }

 private:
  struct Slot {
    GroupKey key;
    std::size_t index = 0;
  };
  void rebuild_locator();

  SchemeParams params_;
  Bytes s2_;
  GroupDirectory gdb_;
  std::vector<NonceEntry> ndb_;
  Rng rng_;
  std::set<std::string> revoked_;
  // locator_[f][id]: position of id inside its field-f index list
  std::vector<std::vector<Slot>> locator_;
};

}  // namespace pmcdb
