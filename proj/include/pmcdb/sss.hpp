#pragma once

// Storage and Search Service: owns EDB. Holds no nonces, keys or group
// metadata.

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "pmcdb/model.hpp"

namespace pmcdb {

struct SearchOutcome {
  SearchResult sr;
  std::vector<RecordId> matched;  // ids of sr entries, in il order
};

// Digests H'(EDB(id, f) ^ e*) computed before the witness set arrives.
struct StagedSearch {
  EncryptedQuery eq;
  std::vector<RecordId> il;
  std::vector<Bytes> digests;
  std::size_t hash_calls = 0;
  std::size_t comparisons = 0;
};

// Storage and Search Service.
class SssState {
 public:
  SssState(SchemeParams params, std::vector<EncryptedRecord> edb);

  SearchOutcome search(const EncryptedQuery& eq, const std::vector<RecordId>& il,
                       const std::vector<Witness>& en) const;
  StagedSearch stage(const EncryptedQuery& eq, const std::vector<RecordId>& il) const;
  SearchOutcome finish(StagedSearch& staged, const std::vector<Witness>& en) const;

  // (id, tag, t) of every searched record, for delete queries.
  std::vector<SearchedTag> searched_tags(const std::vector<RecordId>& il,
                                         const std::vector<Witness>& en) const;

  std::vector<RecordId> append(std::vector<EncryptedRecord> ercds);
  std::vector<EncryptedRecord> records(const std::vector<RecordId>& il) const;
  void apply_shuffle(const std::vector<std::pair<RecordId, EncryptedRecord>>& shuffled);
  void apply_tags(const std::vector<std::pair<RecordId, Bytes>>& updates);

  void revoke(const std::string& user) { revoked_.insert(user); }
  bool is_revoked(const std::string& user) const { return revoked_.contains(user); }
  // Throws a Revoked error for revoked users.
  void admit(const std::string& user) const;

  const std::vector<EncryptedRecord>& edb() const { return edb_; }
  void replace(std::vector<EncryptedRecord> edb) { edb_ = std::move(edb); }
  const SchemeParams& params() const { return params_; }

 private:
  void check_ids(const std::vector<RecordId>& il) const;
  SchemeParams params_;
  std::vector<EncryptedRecord> edb_;
  std::set<std::string> revoked_;
};

}  // namespace pmcdb
