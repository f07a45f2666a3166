#pragma once

// Executable checks of the leakage claims, run against a live in-process
// deployment, its message log and the admin decryption oracle.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pmcdb/deployment.hpp"

namespace pmcdb::audit {

// ---- size pattern ----------------------------------------------------------

struct GroupSizeVerdict {
  GroupKey key;
  std::uint64_t tau = 0;
  std::map<std::string, std::size_t> sizes;  // displayed element -> |SR|
  bool uniform = true;
};

struct SizePatternReport {
  std::vector<GroupSizeVerdict> groups;
  std::size_t queries = 0;
  bool uniform() const;
};

// One live select per element of every group.
SizePatternReport audit_size_pattern(Deployment& d);

// ---- forward privacy -------------------------------------------------------

struct ForwardReport {
  std::size_t trials = 0;
  std::size_t stale_matches = 0;   // must stay 0
  std::size_t insert_trials = 0;   // trials that inserted a matching row after capture
  std::size_t control_failures = 0;  // replays without a shuffle that did not reproduce
  bool ok() const { return trials > 0 && stale_matches == 0 && control_failures == 0; }
};

// Captures (EQ, IL, EN) of a select, shuffles the group, optionally inserts a
// matching row, then replays the stale witnesses against the whole EDB.
ForwardReport audit_forward(Deployment& d, std::size_t trials, Rng& rng);

// ---- backward privacy ------------------------------------------------------

struct BackwardReport {
  std::size_t operations = 0;
  std::size_t selects = 0;
  std::size_t inserts = 0;
  std::size_t deletes = 0;
  std::size_t leaked_rows = 0;  // deleted rows a later select decrypted
  std::size_t mismatches = 0;   // selects that disagreed with the plaintext shadow
  bool padding_ok = true;
  std::string failure;
  bool ok() const { return leaked_rows == 0 && mismatches == 0 && padding_ok; }
};

// Deletes a random key, then runs `operations` interleaved selects, inserts
// and deletes against a plaintext shadow.
BackwardReport audit_backward(Deployment& d, std::size_t operations, Rng& rng);

// ---- untraceability --------------------------------------------------------

struct UntraceReport {
  GroupKey key;
  std::size_t trials = 0;
  std::size_t group_size = 0;
  std::size_t positions_checked = 0;
  std::size_t positions_refreshed = 0;  // ciphertext changed after the shuffle
  std::size_t distinct_match_sets = 0;
  std::map<std::vector<RecordId>, std::size_t> permutations;  // observed IL -> IL' maps
  bool refresh_always() const { return positions_refreshed == positions_checked; }
};

// Repeats one select (with its shuffle) on a group. Reported, not judged.
UntraceReport audit_untraceability(Deployment& d, const GroupKey& key, std::size_t trials);

// ---- information isolation -------------------------------------------------

struct Violation {
  std::uint64_t seq = 0;
  Role role = Role::User;
  std::string rule;
  std::string detail;
};

// Byte strings each role must never receive, matched as 16-byte windows.
class SecretCatalog {
 public:
  static constexpr std::size_t kWindow = 16;

  void forbid(Role role, const std::string& rule, ByteView secret);
  // Finds the first forbidden window in payload, if any.
  std::optional<std::string> scan(Role role, ByteView payload) const;
  std::size_t size() const;

 private:
  using Chunk = std::array<std::uint8_t, kWindow>;
  // Open addressing with linear probing. A one-byte tag per slot (0 = empty)
  // settles most misses without touching the keys.
  class Table {
   public:
    void insert(const Chunk& c, std::uint16_t rule);
    // Rule index of a stored window at p (kWindow bytes), or -1.
    int find(const std::uint8_t* p) const;
    std::size_t size() const { return count_; }

   private:
    void grow();
    std::vector<std::uint8_t> tags_;
    std::vector<Chunk> keys_;
    std::vector<std::uint16_t> rules_;
    std::size_t count_ = 0;
  };
  std::vector<std::string> rule_names_;
  std::map<Role, Table> windows_;  // one table per receiving role
};

// Secrets that are visible in the log itself: η and e* of queries, w of
// witness sets, seeds and nonces of insert registrations, record bytes.
void catalog_from_log(const std::vector<LogEntry>& log, SecretCatalog& catalog);
// Secrets held at rest: keys, every nonce in NDB, every record in EDB.
void catalog_from_store(const EncryptedStore& store, const SecretKeys& keys,
                        SecretCatalog& catalog);

std::vector<Violation> isolation_audit(const std::vector<LogEntry>& log,
                                       const SecretCatalog& catalog);

struct FuzzStats {
  std::size_t selects = 0;
  std::size_t inserts = 0;
  std::size_t deletes = 0;
};

// Random selects, inserts and deletes. When catalog is given, the store is
// added to it after every operation so short-lived nonces are covered too.
FuzzStats fuzz_workload(Deployment& d, std::size_t operations, Rng& rng,
                        SecretCatalog* catalog = nullptr);

// ---- reporting -------------------------------------------------------------

struct PatternReport {
  std::optional<SizePatternReport> size;
  std::optional<ForwardReport> forward;
  std::optional<BackwardReport> backward;
  std::optional<UntraceReport> untrace;
  std::optional<std::vector<Violation>> isolation;
};

// One JSON object per line.
std::string to_json_lines(const PatternReport& report);
std::string to_text(const PatternReport& report);

}  // namespace pmcdb::audit
