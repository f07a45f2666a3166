#include "pmcdb/wire.hpp"

#include "pmcdb/codec.hpp"

namespace pmcdb::wire {

std::string_view to_string(MsgType type) {
  switch (type) {
    case MsgType::Query: return "Query";
    case MsgType::NonceReq: return "NonceReq";
    case MsgType::WitnessSet: return "WitnessSet";
    case MsgType::SearchResult: return "SearchResult";
    case MsgType::ShuffleReq: return "ShuffleReq";
    case MsgType::ShuffleData: return "ShuffleData";
    case MsgType::ShuffledRecords: return "ShuffledRecords";
    case MsgType::Insert: return "Insert";
    case MsgType::InsertIds: return "InsertIds";
    case MsgType::DeleteTags: return "DeleteTags";
    case MsgType::MetaFetch: return "MetaFetch";
    case MsgType::MetaReply: return "MetaReply";
    case MsgType::Error: return "Error";
    case MsgType::Ack: return "Ack";
    case MsgType::PreShuffle: return "PreShuffle";
    case MsgType::FetchRecords: return "FetchRecords";
    case MsgType::Revoke: return "Revoke";
  }
  return "Unknown";
}

Bytes encode_frame(const Message& msg) {
  if (msg.payload.size() > kMaxPayload) throw_parameter("payload exceeds frame limit");
  Writer w;
  w.u32(static_cast<std::uint32_t>(msg.payload.size()));
  w.u8(static_cast<std::uint8_t>(msg.type));
  w.raw(msg.payload);
  return w.take();
}

namespace {

MsgType checked_type(std::uint8_t raw) {
  if (raw < 1 || raw > static_cast<std::uint8_t>(MsgType::Revoke)) {
    throw_protocol("unknown message type " + std::to_string(raw));
  }
  return static_cast<MsgType>(raw);
}

// ---- element codecs --------------------------------------------------------

void put_ids(Writer& w, const std::vector<RecordId>& ids) {
  w.u32(static_cast<std::uint32_t>(ids.size()));
  for (auto id : ids) w.u64(id);
}

std::vector<RecordId> get_ids(Reader& r) {
  const std::uint32_t n = r.u32();
  if (n > r.remaining() / 8) throw_protocol("id list longer than payload");
  std::vector<RecordId> ids(n);
  for (auto& id : ids) id = r.u64();
  return ids;
}

void put_key(Writer& w, const GroupKey& k) {
  if (k.field > 0xFFFF) throw_parameter("field index exceeds 16 bits");
  w.u16(static_cast<std::uint16_t>(k.field));
  w.bytes(k.group.bits);
}

GroupKey get_key(Reader& r) {
  GroupKey k;
  k.field = r.u16();
  k.group.bits = r.bytes();
  return k;
}

void put_records(Writer& w, const std::vector<std::pair<RecordId, EncryptedRecord>>& records) {
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const auto& [id, rec] : records) {
    w.u64(id);
    w.bytes(rec.bytes);
  }
}

std::vector<std::pair<RecordId, EncryptedRecord>> get_records(Reader& r) {
  const std::uint32_t n = r.u32();
  if (n > r.remaining() / 12) throw_protocol("record list longer than payload");
  std::vector<std::pair<RecordId, EncryptedRecord>> out;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    RecordId id = r.u64();
    out.emplace_back(id, EncryptedRecord{r.bytes()});
  }
  return out;
}

template <class T, class F>
std::vector<T> get_list(Reader& r, std::size_t min_item, F&& item) {
  const std::uint32_t n = r.u32();
  if (min_item > 0 && n > r.remaining() / min_item) throw_protocol("list longer than payload");
  std::vector<T> out;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) out.push_back(item());
  return out;
}

Message make(MsgType type, Writer& w) { return Message{type, w.take()}; }

Reader open(const Message& m, MsgType type) {
  expect(m, type);
  return Reader(m.payload);
}

}  // namespace

Message decode_frame(ByteView frame) {
  Reader r(frame);
  const std::uint32_t len = r.u32();
  if (len > kMaxPayload) throw_protocol("frame payload exceeds limit");
  Message m;
  m.type = checked_type(r.u8());
  m.payload = r.raw(len);
  r.expect_end();
  return m;
}

void raise(const ErrorMsg& err) { throw Error(err.kind, err.text, err.role); }

void expect(const Message& m, MsgType type) {
  if (m.type == MsgType::Error && type != MsgType::Error) raise(decode_error(m));
  if (m.type != type) {
    throw_protocol("expected " + std::string(to_string(type)) + " message, got " +
                   std::string(to_string(m.type)));
  }
}

// ---- Query -----------------------------------------------------------------

Message encode(const QueryMsg& m) {
  Writer w;
  w.str(m.user);
  w.u64(m.qid);
  w.u8(static_cast<std::uint8_t>(m.eq.type));
  w.u16(static_cast<std::uint16_t>(m.eq.field));
  w.bytes(m.eq.e_star);
  return make(MsgType::Query, w);
}

QueryMsg decode_query(const Message& msg) {
  Reader r = open(msg, MsgType::Query);
  QueryMsg m;
  m.user = r.str();
  m.qid = r.u64();
  const auto t = r.u8();
  if (t > 1) throw_protocol("unknown query type");
  m.eq.type = static_cast<QueryType>(t);
  m.eq.field = r.u16();
  m.eq.e_star = r.bytes();
  r.expect_end();
  return m;
}

// ---- NonceReq --------------------------------------------------------------

Message encode(const NonceReqMsg& m) {
  Writer w;
  w.str(m.user);
  w.u64(m.qid);
  w.u16(m.field);
  w.bytes(m.eta);
  w.bytes(m.group.bits);
  return make(MsgType::NonceReq, w);
}

NonceReqMsg decode_nonce_req(const Message& msg) {
  Reader r = open(msg, MsgType::NonceReq);
  NonceReqMsg m;
  m.user = r.str();
  m.qid = r.u64();
  m.field = r.u16();
  m.eta = r.bytes();
  m.group.bits = r.bytes();
  r.expect_end();
  return m;
}

// ---- WitnessSet ------------------------------------------------------------

Message encode(const WitnessSetMsg& m) {
  if (m.il.size() != m.en.size()) throw_parameter("witness set size differs from index list");
  Writer w;
  w.u64(m.qid);
  put_key(w, m.key);
  put_ids(w, m.il);
  w.u32(static_cast<std::uint32_t>(m.en.size()));
  for (const auto& x : m.en) {
    w.bytes(x.w);
    w.bytes(x.t);
  }
  return make(MsgType::WitnessSet, w);
}

WitnessSetMsg decode_witness_set(const Message& msg) {
  Reader r = open(msg, MsgType::WitnessSet);
  WitnessSetMsg m;
  m.qid = r.u64();
  m.key = get_key(r);
  m.il = get_ids(r);
  m.en = get_list<Witness>(r, 8, [&] {
    Witness x;
    x.w = r.bytes();
    x.t = r.bytes();
    return x;
  });
  r.expect_end();
  if (m.il.size() != m.en.size()) throw_protocol("witness set size differs from index list");
  return m;
}

// ---- SearchResult ----------------------------------------------------------

Message encode(const SearchResultMsg& m) {
  Writer w;
  w.u32(static_cast<std::uint32_t>(m.sr.entries.size()));
  for (const auto& e : m.sr.entries) {
    w.u64(e.id);
    w.bytes(e.record.bytes);
    w.bytes(e.t);
  }
  put_ids(w, m.matched);
  w.u32(static_cast<std::uint32_t>(m.searched.size()));
  for (const auto& s : m.searched) {
    w.u64(s.id);
    w.bytes(s.tag);
    w.bytes(s.t);
  }
  return make(MsgType::SearchResult, w);
}

SearchResultMsg decode_search_result(const Message& msg) {
  Reader r = open(msg, MsgType::SearchResult);
  SearchResultMsg m;
  m.sr.entries = get_list<SearchEntry>(r, 16, [&] {
    SearchEntry e;
    e.id = r.u64();
    e.record.bytes = r.bytes();
    e.t = r.bytes();
    return e;
  });
  m.matched = get_ids(r);
  m.searched = get_list<SearchedTag>(r, 16, [&] {
    SearchedTag s;
    s.id = r.u64();
    s.tag = r.bytes();
    s.t = r.bytes();
    return s;
  });
  r.expect_end();
  return m;
}

// ---- Shuffle messages ------------------------------------------------------

Message encode(const ShuffleReqMsg& m) {
  const auto& p = m.plan;
  if (p.il.size() != p.il_prime.size() || p.il.size() != p.nn.size()) {
    throw_parameter("shuffle plan parts differ in size");
  }
  Writer w;
  w.u64(m.job);
  put_ids(w, p.il);
  put_ids(w, p.il_prime);
  w.u32(static_cast<std::uint32_t>(p.nn.size()));
  for (const auto& x : p.nn) w.bytes(x);
  return make(MsgType::ShuffleReq, w);
}

ShuffleReqMsg decode_shuffle_req(const Message& msg) {
  Reader r = open(msg, MsgType::ShuffleReq);
  ShuffleReqMsg m;
  m.job = r.u64();
  m.plan.il = get_ids(r);
  m.plan.il_prime = get_ids(r);
  m.plan.nn = get_list<Bytes>(r, 4, [&] { return r.bytes(); });
  r.expect_end();
  return m;
}

Message encode(const ShuffleDataMsg& m) {
  Writer w;
  w.u64(m.job);
  put_records(w, m.records);
  return make(MsgType::ShuffleData, w);
}

ShuffleDataMsg decode_shuffle_data(const Message& msg) {
  Reader r = open(msg, MsgType::ShuffleData);
  ShuffleDataMsg m;
  m.job = r.u64();
  m.records = get_records(r);
  r.expect_end();
  return m;
}

Message encode(const ShuffledRecordsMsg& m) {
  Writer w;
  put_records(w, m.records);
  return make(MsgType::ShuffledRecords, w);
}

ShuffledRecordsMsg decode_shuffled_records(const Message& msg) {
  Reader r = open(msg, MsgType::ShuffledRecords);
  ShuffledRecordsMsg m;
  m.records = get_records(r);
  r.expect_end();
  return m;
}

// ---- Insert ----------------------------------------------------------------

Message encode(const InsertMsg& m) {
  Writer w;
  w.str(m.user);
  w.u32(static_cast<std::uint32_t>(m.records.size()));
  for (const auto& rec : m.records) w.bytes(rec.bytes);
  return make(MsgType::Insert, w);
}

InsertMsg decode_insert(const Message& msg) {
  Reader r = open(msg, MsgType::Insert);
  InsertMsg m;
  m.user = r.str();
  m.records = get_list<EncryptedRecord>(r, 4, [&] { return EncryptedRecord{r.bytes()}; });
  r.expect_end();
  return m;
}

Message encode(const InsertIdsMsg& m) {
  if (m.ids.size() != m.entries.size() || m.ids.size() != m.groups.size()) {
    throw_parameter("insert registration sizes differ");
  }
  Writer w;
  w.str(m.user);
  put_ids(w, m.ids);
  w.u32(static_cast<std::uint32_t>(m.entries.size()));
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    w.bytes(m.entries[i].seed);
    w.bytes(m.entries[i].nonce);
    w.u32(static_cast<std::uint32_t>(m.groups[i].size()));
    for (const auto& g : m.groups[i]) w.bytes(g.bits);
  }
  w.u32(static_cast<std::uint32_t>(m.metas.size()));
  for (const auto& [key, ct] : m.metas) {
    put_key(w, key);
    w.bytes(ct);
  }
  return make(MsgType::InsertIds, w);
}

InsertIdsMsg decode_insert_ids(const Message& msg) {
  Reader r = open(msg, MsgType::InsertIds);
  InsertIdsMsg m;
  m.user = r.str();
  m.ids = get_ids(r);
  const std::uint32_t n = r.u32();
  if (n > r.remaining() / 12) throw_protocol("entry list longer than payload");
  for (std::uint32_t i = 0; i < n; ++i) {
    NonceEntry e;
    e.seed = r.bytes();
    e.nonce = r.bytes();
    m.entries.push_back(std::move(e));
    m.groups.push_back(get_list<GroupId>(r, 4, [&] { return GroupId{r.bytes()}; }));
  }
  m.metas = get_list<std::pair<GroupKey, Bytes>>(r, 10, [&] {
    GroupKey k = get_key(r);
    return std::make_pair(std::move(k), r.bytes());
  });
  r.expect_end();
  if (m.ids.size() != m.entries.size()) throw_protocol("insert registration sizes differ");
  return m;
}

// ---- DeleteTags ------------------------------------------------------------

Message encode(const DeleteTagsMsg& m) {
  Writer w;
  w.str(m.user);
  w.u32(static_cast<std::uint32_t>(m.tags.size()));
  for (const auto& [id, tag] : m.tags) {
    w.u64(id);
    w.bytes(tag);
  }
  return make(MsgType::DeleteTags, w);
}

DeleteTagsMsg decode_delete_tags(const Message& msg) {
  Reader r = open(msg, MsgType::DeleteTags);
  DeleteTagsMsg m;
  m.user = r.str();
  m.tags = get_list<std::pair<RecordId, Bytes>>(r, 12, [&] {
    RecordId id = r.u64();
    return std::make_pair(id, r.bytes());
  });
  r.expect_end();
  return m;
}

// ---- Group metadata --------------------------------------------------------

Message encode(const MetaFetchMsg& m) {
  Writer w;
  w.str(m.user);
  w.u16(m.field);
  w.bytes(m.group.bits);
  return make(MsgType::MetaFetch, w);
}

MetaFetchMsg decode_meta_fetch(const Message& msg) {
  Reader r = open(msg, MsgType::MetaFetch);
  MetaFetchMsg m;
  m.user = r.str();
  m.field = r.u16();
  m.group.bits = r.bytes();
  r.expect_end();
  return m;
}

Message encode(const MetaReplyMsg& m) {
  Writer w;
  put_key(w, m.key);
  w.bytes(m.meta_ct);
  return make(MsgType::MetaReply, w);
}

MetaReplyMsg decode_meta_reply(const Message& msg) {
  Reader r = open(msg, MsgType::MetaReply);
  MetaReplyMsg m;
  m.key = get_key(r);
  m.meta_ct = r.bytes();
  r.expect_end();
  return m;
}

// ---- Control ---------------------------------------------------------------

Message encode(const ErrorMsg& m) {
  Writer w;
  w.u8(static_cast<std::uint8_t>(m.role));
  w.u8(static_cast<std::uint8_t>(m.kind));
  w.str(m.text);
  return make(MsgType::Error, w);
}

ErrorMsg decode_error(const Message& msg) {
  Reader r = open(msg, MsgType::Error);
  ErrorMsg m;
  const auto role = r.u8();
  const auto kind = r.u8();
  if (role > static_cast<std::uint8_t>(Role::Rss)) throw_protocol("unknown role in error");
  if (kind > static_cast<std::uint8_t>(ErrorKind::Io)) throw_protocol("unknown error kind");
  m.role = static_cast<Role>(role);
  m.kind = static_cast<ErrorKind>(kind);
  m.text = r.str();
  r.expect_end();
  return m;
}

Message encode(const AckMsg& m) {
  Writer w;
  w.u32(static_cast<std::uint32_t>(m.groups.size()));
  for (const auto& k : m.groups) put_key(w, k);
  put_ids(w, m.ids);
  return make(MsgType::Ack, w);
}

AckMsg decode_ack(const Message& msg) {
  Reader r = open(msg, MsgType::Ack);
  AckMsg m;
  m.groups = get_list<GroupKey>(r, 6, [&] { return get_key(r); });
  m.ids = get_ids(r);
  r.expect_end();
  return m;
}

Message encode(const PreShuffleMsg& m) {
  Writer w;
  w.str(m.user);
  w.u64(m.job);
  put_key(w, m.key);
  return make(MsgType::PreShuffle, w);
}

PreShuffleMsg decode_pre_shuffle(const Message& msg) {
  Reader r = open(msg, MsgType::PreShuffle);
  PreShuffleMsg m;
  m.user = r.str();
  m.job = r.u64();
  m.key = get_key(r);
  r.expect_end();
  return m;
}

Message encode(const FetchRecordsMsg& m) {
  Writer w;
  w.str(m.user);
  w.u64(m.job);
  put_ids(w, m.il);
  return make(MsgType::FetchRecords, w);
}

FetchRecordsMsg decode_fetch_records(const Message& msg) {
  Reader r = open(msg, MsgType::FetchRecords);
  FetchRecordsMsg m;
  m.user = r.str();
  m.job = r.u64();
  m.il = get_ids(r);
  r.expect_end();
  return m;
}

Message encode(const RevokeMsg& m) {
  Writer w;
  w.str(m.user);
  return make(MsgType::Revoke, w);
}

RevokeMsg decode_revoke(const Message& msg) {
  Reader r = open(msg, MsgType::Revoke);
  RevokeMsg m;
  m.user = r.str();
  r.expect_end();
  return m;
}

}  // namespace pmcdb::wire
