#include "pmcdb/transport.hpp"

#include <algorithm>

namespace pmcdb {

using namespace wire;

namespace {

Message ack(std::vector<GroupKey> groups = {}, std::vector<RecordId> ids = {}) {
  return encode(AckMsg{std::move(groups), std::move(ids)});
}

[[noreturn]] void unexpected(const Message& msg, Role at) {
  throw_protocol("unexpected " + std::string(to_string(msg.type)) + " message at " +
                 std::string(to_string(at)));
}

}  // namespace

Message Service::handle(const Message& msg) {
  std::lock_guard lock(inbox_);
  try {
    return dispatch(msg);
  } catch (const Error& e) {
    return encode(ErrorMsg{role(), e.kind(), e.what()});
  } catch (const std::exception& e) {
    return encode(ErrorMsg{role(), ErrorKind::Protocol, e.what()});
  }
}

// ---- SSS -------------------------------------------------------------------

Message SssService::dispatch(const Message& msg) {
  switch (msg.type) {
    case MsgType::Query: {
      auto m = decode_query(msg);
      state_.admit(m.user);
      if (m.eq.field >= state_.params().field_count) throw_protocol("query field out of range");
      if (!pending_.emplace(m.qid, m.eq).second) throw_protocol("duplicate query id");
      return ack();
    }
    case MsgType::WitnessSet: {
      auto m = decode_witness_set(msg);
      auto it = pending_.find(m.qid);
      if (it == pending_.end()) throw_protocol("witness set for unknown query");
      EncryptedQuery eq = std::move(it->second);
      pending_.erase(it);
      if (m.key.field != eq.field) throw_protocol("witness set field differs from query");
      SearchResultMsg reply;
      auto outcome = state_.search(eq, m.il, m.en);
      reply.sr = std::move(outcome.sr);
      reply.matched = std::move(outcome.matched);
      if (eq.type == QueryType::Delete) reply.searched = state_.searched_tags(m.il, m.en);
      return encode(reply);
    }
    case MsgType::Insert: {
      auto m = decode_insert(msg);
      state_.admit(m.user);
      auto ids = state_.append(std::move(m.records));
      if (on_change) on_change(state_);
      return ack({}, std::move(ids));
    }
    case MsgType::DeleteTags: {
      auto m = decode_delete_tags(msg);
      state_.admit(m.user);
      state_.apply_tags(m.tags);
      if (on_change) on_change(state_);
      return ack();
    }
    case MsgType::FetchRecords: {
      // Shuffles are maintenance that must finish once started, so they are
      // not subject to revocation.
      auto m = decode_fetch_records(msg);
      auto il = m.il;
      std::sort(il.begin(), il.end());
      if (std::adjacent_find(il.begin(), il.end()) != il.end()) {
        throw_protocol("duplicate ids in record fetch");
      }
      auto recs = state_.records(il);
      ShuffleDataMsg reply{m.job, {}};
      reply.records.reserve(il.size());
      for (std::size_t i = 0; i < il.size(); ++i) reply.records.emplace_back(il[i], std::move(recs[i]));
      return encode(reply);
    }
    case MsgType::ShuffledRecords: {
      auto m = decode_shuffled_records(msg);
      state_.apply_shuffle(m.records);
      if (on_change) on_change(state_);
      return ack();
    }
    case MsgType::Revoke:
      state_.revoke(decode_revoke(msg).user);
      return ack();
    default:
      unexpected(msg, Role::Sss);
  }
}

// ---- IWS -------------------------------------------------------------------

Message IwsService::dispatch(const Message& msg) {
  switch (msg.type) {
    case MsgType::NonceReq: {
      auto m = decode_nonce_req(msg);
      state_.admit(m.user);
      auto ws = state_.nonce_blind(m.field, m.eta, m.group);
      return encode(WitnessSetMsg{m.qid, std::move(ws.key), std::move(ws.il), std::move(ws.en)});
    }
    case MsgType::MetaFetch: {
      auto m = decode_meta_fetch(msg);
      state_.admit(m.user);
      auto reply = state_.fetch_group_meta(m.field, m.group);
      return encode(MetaReplyMsg{std::move(reply.key), std::move(reply.meta_ct)});
    }
    case MsgType::InsertIds: {
      auto m = decode_insert_ids(msg);
      state_.admit(m.user);
      auto touched = state_.register_insert(m.entries, m.groups, m.ids, m.metas);
      if (on_change) on_change(state_);
      return ack({touched.begin(), touched.end()});
    }
    case MsgType::PreShuffle: {
      auto m = decode_pre_shuffle(msg);
      auto plan = state_.pre_shuffle(m.key);
      if (on_change) on_change(state_);
      return encode(ShuffleReqMsg{m.job, std::move(plan)});
    }
    case MsgType::Revoke:
      state_.revoke(decode_revoke(msg).user);
      return ack();
    default:
      unexpected(msg, Role::Iws);
  }
}

// ---- RSS -------------------------------------------------------------------

Message RssService::dispatch(const Message& msg) {
  switch (msg.type) {
    case MsgType::ShuffleReq: {
      auto m = decode_shuffle_req(msg);
      auto& job = jobs_[m.job];
      if (job.plan) throw_protocol("shuffle plan sent twice");
      job.plan = std::move(m.plan);
      return job.records ? complete(m.job) : ack();
    }
    case MsgType::ShuffleData: {
      auto m = decode_shuffle_data(msg);
      auto& job = jobs_[m.job];
      if (job.records) throw_protocol("shuffle data sent twice");
      job.records = std::move(m.records);
      return job.plan ? complete(m.job) : ack();
    }
    default:
      unexpected(msg, Role::Rss);
  }
}

Message RssService::complete(std::uint64_t job_id) {
  auto node = jobs_.extract(job_id);
  auto& partial = node.mapped();
  ShuffleJob job{std::move(*partial.records), std::move(partial.plan->il),
                 std::move(partial.plan->il_prime), std::move(partial.plan->nn)};
  return encode(ShuffledRecordsMsg{rss::shuffle(job)});
}

// ---- channels --------------------------------------------------------------

Message InProcEndpoint::call(const Message& request) {
  auto in = decode_frame(encode_frame(request));
  auto out = service_.handle(in);
  return decode_frame(encode_frame(out));
}

void MessageLog::record(Role from, Role to, const Message& msg) {
  std::lock_guard lock(mu_);
  entries_.push_back(LogEntry{entries_.size(), from, to, msg});
}

std::vector<LogEntry> MessageLog::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::vector<LogEntry> MessageLog::entries_since(std::size_t seq) const {
  std::lock_guard lock(mu_);
  if (seq >= entries_.size()) return {};
  return {entries_.begin() + static_cast<std::ptrdiff_t>(seq), entries_.end()};
}

std::size_t MessageLog::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void MessageLog::clear() {
  std::lock_guard lock(mu_);
  entries_.clear();
}

}  // namespace pmcdb
