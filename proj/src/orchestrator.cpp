#include "pmcdb/orchestrator.hpp"

#include <algorithm>

namespace pmcdb {

using namespace wire;

// ---- locks -----------------------------------------------------------------

LockManager::Guard::~Guard() {
  if (owner_ != nullptr) owner_->release(mode_, key_);
}

LockManager::Guard LockManager::lock_group(const GroupKey& key) {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] {
    return !exclusive_ && !field_held_ && (active_ == 0 || active_field_ == key.field) &&
           !busy_.contains(key);
  });
  ++active_;
  active_field_ = key.field;
  busy_.insert(key);
  return Guard(this, Mode::Group, key);
}

LockManager::Guard LockManager::lock_field(std::size_t field) {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return !exclusive_ && active_ == 0; });
  ++active_;
  active_field_ = field;
  field_held_ = true;
  return Guard(this, Mode::Field, GroupKey{field, {}});
}

LockManager::Guard LockManager::lock_exclusive() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return !exclusive_ && active_ == 0; });
  exclusive_ = true;
  return Guard(this, Mode::Exclusive, {});
}

LockManager::Guard LockManager::lock_query(std::size_t field, const GroupId& raw) {
  std::optional<GroupKey> served;
  {
    std::lock_guard lock(mu_);
    auto it = resolved_.find(GroupKey{field, raw});
    if (it != resolved_.end()) served = it->second;
  }
  return served ? lock_group(*served) : lock_field(field);
}

void LockManager::learn(std::size_t field, const GroupId& raw, const GroupKey& served) {
  std::lock_guard lock(mu_);
  resolved_[GroupKey{field, raw}] = served;
}

void LockManager::release(Mode mode, const GroupKey& key) {
  {
    std::lock_guard lock(mu_);
    switch (mode) {
      case Mode::Exclusive:
        exclusive_ = false;
        break;
      case Mode::Field:
        field_held_ = false;
        --active_;
        break;
      case Mode::Group:
        busy_.erase(key);
        --active_;
        break;
      case Mode::None:
        break;
    }
  }
  cv_.notify_all();
}

// ---- orchestrator ----------------------------------------------------------

Orchestrator::Orchestrator(Scheme scheme, SecretKeys keys, Endpoints endpoints, std::string user,
                           Rng rng, MessageLog* log, std::shared_ptr<LockManager> locks)
    : scheme_(std::move(scheme)), keys_(std::move(keys)), endpoints_(endpoints),
      user_(std::move(user)), rng_(std::move(rng)), log_(log), locks_(std::move(locks)) {
  if (!endpoints_.sss || !endpoints_.iws || !endpoints_.rss) {
    throw_parameter("orchestrator needs all three endpoints");
  }
  if (!locks_) locks_ = std::make_shared<LockManager>();
  keys_.validate(scheme_.params);
}

Endpoint& Orchestrator::endpoint(Role role) {
  switch (role) {
    case Role::Sss: return *endpoints_.sss;
    case Role::Iws: return *endpoints_.iws;
    case Role::Rss: return *endpoints_.rss;
    default: throw_parameter("no endpoint for role " + std::string(to_string(role)));
  }
}

Message Orchestrator::send(Role from, Role to, const Message& msg) {
  if (log_ != nullptr) log_->record(from, to, msg);
  Message reply = endpoint(to).call(msg);
  if (log_ != nullptr) log_->record(to, Role::User, reply);
  if (reply.type == MsgType::Error) raise(decode_error(reply));
  return reply;
}

Orchestrator::Searched Orchestrator::search(const Query& q) {
  Searched out;
  out.session = client::query_enc(scheme_, keys_, q, rng_);
  const std::uint64_t qid = rng_.next_u64();
  expect(send(Role::User, Role::Sss, encode(QueryMsg{user_, qid, out.session.eq})), MsgType::Ack);
  Message ws = send(Role::User, Role::Iws,
                    encode(NonceReqMsg{user_, qid, static_cast<std::uint16_t>(q.field),
                                       out.session.eta, out.session.group}));
  out.ws = decode_witness_set(ws);
  if (out.ws.qid != qid || out.ws.key.field != q.field) {
    throw_protocol("IWS answered a different query");
  }
  // the IWS reply is relayed to the SSS unchanged
  out.result = decode_search_result(send(Role::Iws, Role::Sss, ws));
  locks_->learn(q.field, out.session.group, out.ws.key);
  return out;
}

SelectTrace Orchestrator::select(const Query& q, bool shuffle) {
  if (q.type != QueryType::Select) throw_parameter("select needs a Select query");
  if (q.field >= scheme_.params.field_count) throw_parameter("query field out of range");
  auto guard = locks_->lock_query(q.field, scheme_.group_of(keys_.s1, q.field, q.element));
  auto s = search(q);

  SelectTrace t;
  auto dec = client::rcd_dec(scheme_.params, keys_, s.result.sr, s.session.eta);
  if (dec.malformed != 0) throw_protocol("search result carried malformed entries");
  t.records = std::move(dec.records);
  t.dummies = dec.dummies;
  t.key = s.ws.key;
  t.session = std::move(s.session);
  t.il = std::move(s.ws.il);
  t.en = std::move(s.ws.en);
  t.matched = std::move(s.result.matched);
  t.result_size = s.result.sr.entries.size();
  // results are ready before the shuffle; the group stays locked until it ends
  if (shuffle) {
    shuffle_unlocked(t.key);
    t.shuffled = true;
  }
  return t;
}

std::vector<Record> Orchestrator::run_select(const Query& q) { return select(q).records; }

void Orchestrator::shuffle(const GroupKey& key) {
  auto guard = locks_->lock_group(key);
  shuffle_unlocked(key);
}

void Orchestrator::shuffle_unlocked(const GroupKey& key) {
  const std::uint64_t job = rng_.next_u64();
  Message req = send(Role::User, Role::Iws, encode(PreShuffleMsg{user_, job, key}));
  auto plan = decode_shuffle_req(req);
  if (plan.job != job) throw_protocol("IWS answered a different shuffle job");
  if (plan.plan.il.empty()) return;

  Message data = send(Role::User, Role::Sss, encode(FetchRecordsMsg{user_, job, plan.plan.il}));
  expect(data, MsgType::ShuffleData);

  // The RSS answers the second half of the job with the shuffled records.
  Message first = send(Role::Sss, Role::Rss, data);
  Message second = send(Role::Iws, Role::Rss, req);
  Message shuffled = first.type == MsgType::ShuffledRecords ? first : second;
  expect(shuffled, MsgType::ShuffledRecords);
  expect(send(Role::Rss, Role::Sss, shuffled), MsgType::Ack);
}

InsertTrace Orchestrator::insert(const Record& rcd) {
  const auto& p = scheme_.params;
  validate_record(rcd, p);
  auto guard = locks_->lock_exclusive();

  std::vector<client::FetchedMeta> metas;
  metas.reserve(p.field_count);
  for (std::size_t f = 0; f < p.field_count; ++f) {
    auto g = scheme_.group_of(keys_.s1, f, rcd.elements[f]);
    auto reply = decode_meta_reply(send(
        Role::User, Role::Iws, encode(MetaFetchMsg{user_, static_cast<std::uint16_t>(f), g})));
    metas.push_back({std::move(reply.key), std::move(reply.meta_ct)});
  }
  auto bundle = client::build_insert(scheme_, keys_, rcd, metas, rng_);

  InsertMsg ins{user_, {}};
  for (const auto& item : bundle.items) ins.records.push_back(item.row.record);
  auto ids = decode_ack(send(Role::User, Role::Sss, encode(ins))).ids;
  if (ids.size() != bundle.items.size()) throw_protocol("SSS returned the wrong number of ids");

  InsertIdsMsg reg{user_, ids, {}, {}, bundle.updated_meta};
  for (const auto& item : bundle.items) {
    reg.entries.push_back(item.row.nonce);
    reg.groups.push_back(item.row.groups);
  }
  auto touched = decode_ack(send(Role::User, Role::Iws, encode(reg))).groups;

  InsertTrace t;
  t.ids = ids;
  t.dummy_count = bundle.dummy_count;
  std::vector<std::size_t> order(ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ids[a] < ids[b]; });
  for (auto i : order) t.rows.push_back(bundle.items[i].plain);
  std::sort(t.ids.begin(), t.ids.end());
  for (const auto& key : touched) shuffle_unlocked(key);
  t.touched = std::move(touched);
  return t;
}

void Orchestrator::run_insert(const Record& rcd) { insert(rcd); }

DeleteTrace Orchestrator::remove(const Query& q) {
  if (q.field >= scheme_.params.field_count) throw_parameter("query field out of range");
  Query dq = q;
  dq.type = QueryType::Delete;
  auto guard = locks_->lock_query(dq.field, scheme_.group_of(keys_.s1, dq.field, dq.element));
  auto s = search(dq);

  std::set<RecordId> matched(s.result.matched.begin(), s.result.matched.end());
  auto rewrite = client::rebuild_delete_tags(scheme_.params, keys_, matched, s.result.searched,
                                             s.session.eta, rng_);
  expect(send(Role::User, Role::Sss, encode(DeleteTagsMsg{user_, std::move(rewrite.tags)})),
         MsgType::Ack);
  shuffle_unlocked(s.ws.key);

  DeleteTrace t;
  t.matched_real = rewrite.matched_real;
  t.matched = std::move(s.result.matched);
  t.key = s.ws.key;
  return t;
}

std::size_t Orchestrator::run_delete(const Query& q) { return remove(q).matched_real; }

void Orchestrator::revoke(const std::string& user) {
  expect(send(Role::Admin, Role::Sss, encode(RevokeMsg{user})), MsgType::Ack);
  expect(send(Role::Admin, Role::Iws, encode(RevokeMsg{user})), MsgType::Ack);
}

}  // namespace pmcdb
