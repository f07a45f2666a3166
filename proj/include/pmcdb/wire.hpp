#pragma once

// Protocol messages exchanged between the user and the three services.
//
// Frame: 4-byte big-endian payload length, 1-byte message type, payload.
// Integers are big-endian; byte strings carry a 4-byte length prefix.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pmcdb/error.hpp"
#include "pmcdb/iws.hpp"
#include "pmcdb/model.hpp"
#include "pmcdb/rss.hpp"
#include "pmcdb/sss.hpp"

namespace pmcdb::wire {

enum class MsgType : std::uint8_t {
  Query = 1,            // user -> SSS
  NonceReq = 2,         // user -> IWS
  WitnessSet = 3,       // IWS -> SSS
  SearchResult = 4,     // SSS -> user
  ShuffleReq = 5,       // IWS -> RSS: (IL, IL', NN)
  ShuffleData = 6,      // SSS -> RSS: searched records
  ShuffledRecords = 7,  // RSS -> SSS
  Insert = 8,           // user -> SSS: new records
  InsertIds = 9,        // SSS ids + user's INS_IWS -> IWS
  DeleteTags = 10,      // user -> SSS
  MetaFetch = 11,       // user -> IWS
  MetaReply = 12,       // IWS -> user
  Error = 13,
  Ack = 14,
  PreShuffle = 15,    // user -> IWS: shuffle a group
  FetchRecords = 16,  // user -> SSS: release a group's records to the RSS
  Revoke = 17,        // admin -> SSS / IWS
};

std::string_view to_string(MsgType type);

struct Message {
  MsgType type = MsgType::Ack;
  Bytes payload;
};

constexpr std::size_t kFrameHeader = 5;
constexpr std::uint32_t kMaxPayload = 1u << 30;

Bytes encode_frame(const Message& msg);
// Parses one complete frame; the input must contain exactly one frame.
Message decode_frame(ByteView frame);

// ---------------------------------------------------------------------------
// Payload schemas. Each encode_* has a matching decode_* that validates the
// layout and throws a protocol error on any mismatch.

struct QueryMsg {
  std::string user;
  std::uint64_t qid = 0;
  EncryptedQuery eq;
};

struct NonceReqMsg {
  std::string user;
  std::uint64_t qid = 0;  // echoed in the WitnessSet so the SSS can pair it
  std::uint16_t field = 0;
  Bytes eta;
  GroupId group;
};

struct WitnessSetMsg {
  std::uint64_t qid = 0;
  GroupKey key;
  std::vector<RecordId> il;
  std::vector<Witness> en;
};

struct SearchResultMsg {
  SearchResult sr;
  std::vector<RecordId> matched;
  std::vector<SearchedTag> searched;  // filled for delete queries only
};

struct ShuffleReqMsg {
  std::uint64_t job = 0;
  ShufflePlan plan;
};

struct ShuffleDataMsg {
  std::uint64_t job = 0;
  std::vector<std::pair<RecordId, EncryptedRecord>> records;
};

struct ShuffledRecordsMsg {
  std::vector<std::pair<RecordId, EncryptedRecord>> records;
};

struct InsertMsg {
  std::string user;
  std::vector<EncryptedRecord> records;
};

struct InsertIdsMsg {
  std::string user;
  std::vector<RecordId> ids;
  std::vector<NonceEntry> entries;
  std::vector<std::vector<GroupId>> groups;
  std::vector<std::pair<GroupKey, Bytes>> metas;
};

struct DeleteTagsMsg {
  std::string user;
  std::vector<std::pair<RecordId, Bytes>> tags;
};

struct MetaFetchMsg {
  std::string user;
  std::uint16_t field = 0;
  GroupId group;
};

struct MetaReplyMsg {
  GroupKey key;
  Bytes meta_ct;
};

struct ErrorMsg {
  Role role = Role::User;
  ErrorKind kind = ErrorKind::Protocol;
  std::string text;
};

struct AckMsg {
  std::vector<GroupKey> groups;  // groups touched by an insert registration
  std::vector<RecordId> ids;
};

struct PreShuffleMsg {
  std::string user;
  std::uint64_t job = 0;
  GroupKey key;
};

struct FetchRecordsMsg {
  std::string user;
  std::uint64_t job = 0;
  std::vector<RecordId> il;
};

struct RevokeMsg {
  std::string user;
};

Message encode(const QueryMsg& m);
Message encode(const NonceReqMsg& m);
Message encode(const WitnessSetMsg& m);
Message encode(const SearchResultMsg& m);
Message encode(const ShuffleReqMsg& m);
Message encode(const ShuffleDataMsg& m);
Message encode(const ShuffledRecordsMsg& m);
Message encode(const InsertMsg& m);
Message encode(const InsertIdsMsg& m);
Message encode(const DeleteTagsMsg& m);
Message encode(const MetaFetchMsg& m);
Message encode(const MetaReplyMsg& m);
Message encode(const ErrorMsg& m);
Message encode(const AckMsg& m);
Message encode(const PreShuffleMsg& m);
Message encode(const FetchRecordsMsg& m);
Message encode(const RevokeMsg& m);

QueryMsg decode_query(const Message& m);
NonceReqMsg decode_nonce_req(const Message& m);
WitnessSetMsg decode_witness_set(const Message& m);
SearchResultMsg decode_search_result(const Message& m);
ShuffleReqMsg decode_shuffle_req(const Message& m);
ShuffleDataMsg decode_shuffle_data(const Message& m);
ShuffledRecordsMsg decode_shuffled_records(const Message& m);
InsertMsg decode_insert(const Message& m);
InsertIdsMsg decode_insert_ids(const Message& m);
DeleteTagsMsg decode_delete_tags(const Message& m);
MetaFetchMsg decode_meta_fetch(const Message& m);
MetaReplyMsg decode_meta_reply(const Message& m);
ErrorMsg decode_error(const Message& m);
AckMsg decode_ack(const Message& m);
PreShuffleMsg decode_pre_shuffle(const Message& m);
FetchRecordsMsg decode_fetch_records(const Message& m);
RevokeMsg decode_revoke(const Message& m);

// Error frames become exceptions carrying the remote role.
[[noreturn]] void raise(const ErrorMsg& err);
// Throws if m is an Error frame or not of the expected type.
void expect(const Message& m, MsgType type);

}  // namespace pmcdb::wire
