#pragma once

// Trusted-admin pipeline: grouping, dummy padding, encryption of the initial
// table, periodic compaction, and the admin's decryption view of a store.

#include <map>
#include <string>
#include <vector>

#include "pmcdb/model.hpp"

namespace pmcdb::admin {

using GroupTable = std::map<GroupKey, GroupMeta>;

struct GroupGenResult {
  GroupTable groups;
  std::vector<std::string> warnings;  // groups with fewer than λ elements
};

GroupGenResult group_gen(const Scheme& scheme, const SecretKeys& keys, const PlainDatabase& db);

struct DummyGenResult {
  PlainDatabase padded;  // real rows flagged real, dummies appended, then shuffled
  std::vector<std::uint64_t> sigma;  // Σ_f
  std::uint64_t sigma_max = 0;
};

DummyGenResult dummy_gen(const Scheme& scheme, const PlainDatabase& db, const GroupTable& groups,
                         Rng& rng);

struct SetupOutput {
  EncryptedStore store;
  std::uint64_t sigma_max = 0;
  std::vector<std::string> warnings;
};

SetupOutput setup(const Scheme& scheme, const SecretKeys& keys, const PlainDatabase& db,
                  Rng& rng);

// Decrypts every record with its aligned nonce; Record::real carries the tag verdict.
std::vector<Record> decrypt_store(const SchemeParams& params, const SecretKeys& keys,
                                  const std::vector<EncryptedRecord>& edb,
                                  const std::vector<NonceEntry>& ndb);

GroupTable open_directory(const GroupDirectory& gdb, const SecretKeys& keys);

// True when every element of every group occurs exactly τ times over all rows.
bool padding_holds(const GroupTable& groups, const std::vector<Record>& rows,
                   std::string* failure = nullptr);

struct CompactReport {
  std::size_t nulled_slots = 0;
  std::size_t removed_records = 0;
};

// Lowers padding where every element of a group has a spare dummy, then drops
// dummies that became all-NULL. Rewrites ids densely; all stores stay aligned.
CompactReport compact(const Scheme& scheme, const SecretKeys& keys, EncryptedStore& store,
                      Rng& rng);

}  // namespace pmcdb::admin
