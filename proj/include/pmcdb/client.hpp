#pragma once

// User-side cryptography: record and query encryption, result decryption,
// insert construction and delete-tag rewriting.

#include <set>
#include <utility>
#include <vector>

#include "pmcdb/model.hpp"

namespace pmcdb::client {

struct EncryptedRow {
  EncryptedRecord record;
  NonceEntry nonce;
  std::vector<GroupId> groups;  // Grcd: raw encoder output per field
};

// Encrypts rcd under a fresh seed; rcd.real selects the tag class.
EncryptedRow rcd_enc(const Scheme& scheme, const SecretKeys& keys, const Record& rcd, Rng& rng);

// Removes the nonce and the deterministic layer. real is the tag_check verdict.
Record open_record(const SchemeParams& params, const SecretKeys& keys,
                   const EncryptedRecord& ercd, ByteView nonce);

struct QuerySession {
  Bytes eta;  // stays with the user
  GroupId group;
  EncryptedQuery eq;
};

QuerySession query_enc(const Scheme& scheme, const SecretKeys& keys, const Query& q, Rng& rng);

struct Decrypted {
  std::vector<Record> records;  // real rows only
  std::size_t dummies = 0;
  std::size_t malformed = 0;  // entries whose layout could not be parsed
};

Decrypted rcd_dec(const SchemeParams& params, const SecretKeys& keys, const SearchResult& sr,
                  ByteView eta);

// Group metadata as served by the IWS, after closest-group substitution.
struct FetchedMeta {
  GroupKey key;
  Bytes meta_ct;
};

struct InsertItem {
  EncryptedRow row;
  Record plain;
};

struct InsertBundle {
  std::vector<InsertItem> items;  // W+1 rows in random order
  std::vector<std::pair<GroupKey, Bytes>> updated_meta;
  std::vector<GroupMeta> metas_after;  // plaintext of updated_meta, same order
  std::vector<std::size_t> gammas;     // γ_f per field
  std::size_t dummy_count = 0;         // W
};

// metas[f] must describe the group the IWS resolved for rcd's field f.
InsertBundle build_insert(const Scheme& scheme, const SecretKeys& keys, const Record& rcd,
                          const std::vector<FetchedMeta>& metas, Rng& rng);

struct DeleteRewrite {
  std::vector<std::pair<RecordId, Bytes>> tags;
  std::size_t matched_real = 0;
};

// Fresh random tags for matched ids, class-preserving fresh tags for the rest.
DeleteRewrite rebuild_delete_tags(const SchemeParams& params, const SecretKeys& keys,
                                  const std::set<RecordId>& matched,
                                  const std::vector<SearchedTag>& searched, ByteView eta,
                                  Rng& rng);

}  // namespace pmcdb::client
