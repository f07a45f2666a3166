#pragma once

// User-side protocol driver. Talks to the three roles through endpoints and
// relays the server-to-server messages (WitnessSet, ShuffleReq, ShuffleData,
// ShuffledRecords, InsertIds) between them.

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "pmcdb/client.hpp"
#include "pmcdb/transport.hpp"

namespace pmcdb {

// Admission control for concurrent users. Operations on different groups of
// the same field may interleave. A shuffle renumbers records that also sit
// in other fields' groups, so operations on different fields never overlap,
// and inserts run alone.
//
// The group a query lands in is only known once the IWS has resolved it, so
// the first query for an unseen (field, raw group id) locks the whole field
// and the resolved key is remembered for later queries.
class LockManager {
 public:
  enum class Mode { None, Group, Field, Exclusive };

  class Guard {
   public:
    Guard() = default;
    Guard(LockManager* owner, Mode mode, GroupKey key)
        : owner_(owner), mode_(mode), key_(std::move(key)) {}
    Guard(Guard&& o) noexcept
        : owner_(std::exchange(o.owner_, nullptr)), mode_(o.mode_), key_(std::move(o.key_)) {}
    Guard& operator=(Guard&&) = delete;
    ~Guard();

   private:
    LockManager* owner_ = nullptr;
    Mode mode_ = Mode::None;
    GroupKey key_;
  };

  Guard lock_group(const GroupKey& key);
  Guard lock_field(std::size_t field);
  Guard lock_exclusive();
  // Locks the resolved group when known, else the whole field.
  Guard lock_query(std::size_t field, const GroupId& raw);
  void learn(std::size_t field, const GroupId& raw, const GroupKey& served);

 private:
  void release(Mode mode, const GroupKey& key);

  std::mutex mu_;
  std::condition_variable cv_;
  bool exclusive_ = false;
  bool field_held_ = false;
  std::size_t active_ = 0;
  std::size_t active_field_ = 0;
  std::set<GroupKey> busy_;
  std::map<GroupKey, GroupKey> resolved_;
};

struct Endpoints {
  Endpoint* sss = nullptr;
  Endpoint* iws = nullptr;
  Endpoint* rss = nullptr;
};

// Everything a select exposed, for audits and tests.
struct SelectTrace {
  std::vector<Record> records;  // real rows
  std::size_t dummies = 0;
  GroupKey key;  // the group the IWS served
  client::QuerySession session;
  std::vector<RecordId> il;
  std::vector<Witness> en;
  std::vector<RecordId> matched;
  std::size_t result_size = 0;  // |SR|
  bool shuffled = false;
};

struct InsertTrace {
  std::vector<RecordId> ids;
  std::size_t dummy_count = 0;  // W
  std::vector<Record> rows;     // inserted rows in id order, real and dummy
  std::vector<GroupKey> touched;
};

struct DeleteTrace {
  std::size_t matched_real = 0;
  std::vector<RecordId> matched;
  GroupKey key;
};

class Orchestrator {
 public:
  Orchestrator(Scheme scheme, SecretKeys keys, Endpoints endpoints, std::string user, Rng rng,
               MessageLog* log = nullptr, std::shared_ptr<LockManager> locks = nullptr);

  std::vector<Record> run_select(const Query& q);
  void run_insert(const Record& rcd);
  std::size_t run_delete(const Query& q);

  // shuffle=false skips the post-search shuffle (negative controls only).
  SelectTrace select(const Query& q, bool shuffle = true);
  InsertTrace insert(const Record& rcd);
  DeleteTrace remove(const Query& q);

  // Re-randomizes and permutes one group's records.
  void shuffle(const GroupKey& key);

  // Admin action: adds `user` to the revocation lists of the SSS and IWS.
  void revoke(const std::string& user);

  const Scheme& scheme() const { return scheme_; }
  const std::string& user() const { return user_; }

 private:
  wire::Message send(Role from, Role to, const wire::Message& msg);
  Endpoint& endpoint(Role role);
  struct Searched {
    client::QuerySession session;
    wire::WitnessSetMsg ws;
    wire::SearchResultMsg result;
  };
  Searched search(const Query& q);
  void shuffle_unlocked(const GroupKey& key);

  Scheme scheme_;
  SecretKeys keys_;
  Endpoints endpoints_;
  std::string user_;
  Rng rng_;
  MessageLog* log_;
  std::shared_ptr<LockManager> locks_;
};

}  // namespace pmcdb
