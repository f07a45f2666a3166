#pragma once

// On-disk formats for EDB, NDB and GDB, the deployment manifest, key files
// and CSV ingestion.
//
// Every store file starts with a 20-byte header:
//   "PMCD" | version u16 | F u16 | elem_len u16 | tag_len u16 | count u64
// EDB body: count records of F*elem_len + tag_len bytes.
// NDB body: count entries of seed_len + nonce_len bytes.
// GDB body: count entries of
//   field u16 | group (len-prefixed) | IL (u32 n, n x u64) | meta_ct (len-prefixed)

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmcdb/model.hpp"

namespace pmcdb::store {

constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderLen = 20;

struct StoreHeader {
  std::uint16_t version = kVersion;
  std::uint16_t field_count = 0;
  std::uint16_t elem_len = 0;
  std::uint16_t tag_len = 0;
  std::uint64_t count = 0;
};

Bytes encode_edb(const SchemeParams& p, const std::vector<EncryptedRecord>& edb);
std::vector<EncryptedRecord> decode_edb(const SchemeParams& p, ByteView data);
Bytes encode_ndb(const SchemeParams& p, const std::vector<NonceEntry>& ndb);
std::vector<NonceEntry> decode_ndb(const SchemeParams& p, ByteView data);
Bytes encode_gdb(const SchemeParams& p, const GroupDirectory& gdb);
GroupDirectory decode_gdb(const SchemeParams& p, ByteView data);

// File forms. Saves go through a temporary file and a rename; loads either
// return a complete store or throw an Io error.
void save_edb(const std::filesystem::path& path, const SchemeParams& p,
              const std::vector<EncryptedRecord>& edb);
std::vector<EncryptedRecord> load_edb(const std::filesystem::path& path, const SchemeParams& p);
void save_ndb(const std::filesystem::path& path, const SchemeParams& p,
              const std::vector<NonceEntry>& ndb);
std::vector<NonceEntry> load_ndb(const std::filesystem::path& path, const SchemeParams& p);
void save_gdb(const std::filesystem::path& path, const SchemeParams& p, const GroupDirectory& gdb);
GroupDirectory load_gdb(const std::filesystem::path& path, const SchemeParams& p);

Bytes read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, ByteView data);

// ---- manifest --------------------------------------------------------------

// Public deployment description written next to the store files.
struct Manifest {
  SchemeParams params;
  nlohmann::json encoder;  // {"kind": "keyed", "bits": b} | modulo | fixed
  std::vector<std::string> columns;
};

nlohmann::json encoder_spec(const GroupEncoder& encoder);
std::shared_ptr<const GroupEncoder> make_encoder(const nlohmann::json& spec,
                                                 const SchemeParams& params);
Scheme scheme_of(const Manifest& m);

void save_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest load_manifest(const std::filesystem::path& path);

// The stores of a deployment directory: manifest.json, edb.bin, ndb.bin, gdb.bin.
struct Layout {
  std::filesystem::path dir;
  std::filesystem::path manifest() const { return dir / "manifest.json"; }
  std::filesystem::path edb() const { return dir / "edb.bin"; }
  std::filesystem::path ndb() const { return dir / "ndb.bin"; }
  std::filesystem::path gdb() const { return dir / "gdb.bin"; }
};

void save_store(const Layout& layout, const SchemeParams& p, const EncryptedStore& s);
EncryptedStore load_store(const Layout& layout, const SchemeParams& p);

// ---- keys ------------------------------------------------------------------

// PMCDB_S1 / PMCDB_S2 (hex) when both are set, otherwise the key file
// ({"s1": hex, "s2": hex}).
SecretKeys load_keys(const SchemeParams& p, const std::filesystem::path& key_file);
void save_key_file(const std::filesystem::path& path, const SecretKeys& keys);

// ---- plaintext input -------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC 4180 style: comma separated, optional double quotes, "" escapes.
CsvTable parse_csv(std::string_view text);

struct Ingested {
  PlainDatabase db;
  std::vector<std::string> columns;
};

// The header row names the fields; params.field_count must match it.
Ingested ingest_csv(const std::filesystem::path& path, const SchemeParams& params);
Ingested ingest_csv_text(std::string_view text, const SchemeParams& params);

// Single-column table of integer keys drawn from [0, distinct), rendered as
// zero-padded decimal text of `width` digits.
PlainDatabase integer_table(std::size_t rows, std::uint64_t distinct, std::size_t width,
                            const SchemeParams& params, Rng& rng);

// Group map file: JSON {"<column>": {"<element>": group, ...}, ...}.
std::shared_ptr<const FixedGroupEncoder> load_group_map(const std::filesystem::path& path,
                                                        const std::vector<std::string>& columns,
                                                        const SchemeParams& params);

}  // namespace pmcdb::store
