#include "pmcdb/store.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pmcdb/codec.hpp"
#include "pmcdb/error.hpp"

namespace pmcdb::store {

namespace fs = std::filesystem;
using wire::Reader;
using wire::Writer;

namespace {

[[noreturn]] void throw_io(const std::string& what) { throw Error(ErrorKind::Io, what); }

void put_header(Writer& w, const SchemeParams& p, std::uint64_t count) {
  w.raw(to_bytes("PMCD"));
  w.u16(kVersion);
  w.u16(static_cast<std::uint16_t>(p.field_count));
  w.u16(static_cast<std::uint16_t>(p.elem_len));
  w.u16(static_cast<std::uint16_t>(p.tag_len()));
  w.u64(count);
}

// Checks magic, version and that the layout matches params.
std::uint64_t get_header(Reader& r, const SchemeParams& p, const char* what) {
  if (r.remaining() < kHeaderLen) throw_io(std::string(what) + ": file shorter than header");
  if (r.raw(4) != to_bytes("PMCD")) throw_io(std::string(what) + ": bad magic");
  StoreHeader h;
  h.version = r.u16();
  h.field_count = r.u16();
  h.elem_len = r.u16();
  h.tag_len = r.u16();
  h.count = r.u64();
  if (h.version != kVersion) {
    throw_io(std::string(what) + ": unsupported version " + std::to_string(h.version));
  }
  if (h.field_count != p.field_count || h.elem_len != p.elem_len || h.tag_len != p.tag_len()) {
    throw_io(std::string(what) + ": layout does not match the scheme parameters");
  }
  return h.count;
}

void check_fixed_body(Reader& r, std::uint64_t count, std::size_t item, const char* what) {
  if (item == 0 || r.remaining() / item != count || r.remaining() % item != 0) {
    throw_io(std::string(what) + ": body length does not match the header count");
  }
}

}  // namespace

// ---- EDB / NDB / GDB -------------------------------------------------------

Bytes encode_edb(const SchemeParams& p, const std::vector<EncryptedRecord>& edb) {
  Writer w;
  put_header(w, p, edb.size());
  for (const auto& r : edb) {
    if (r.bytes.size() != p.record_len()) throw_parameter("EDB record length mismatch");
    w.raw(r.bytes);
  }
  return w.take();
}

std::vector<EncryptedRecord> decode_edb(const SchemeParams& p, ByteView data) {
  Reader r(data);
  const auto count = get_header(r, p, "EDB");
  check_fixed_body(r, count, p.record_len(), "EDB");
  std::vector<EncryptedRecord> out(count);
  for (auto& rec : out) rec.bytes = r.raw(p.record_len());
  return out;
}

Bytes encode_ndb(const SchemeParams& p, const std::vector<NonceEntry>& ndb) {
  Writer w;
  put_header(w, p, ndb.size());
  for (const auto& n : ndb) {
    if (n.seed.size() != p.seed_len() || n.nonce.size() != p.nonce_len()) {
      throw_parameter("NDB entry length mismatch");
    }
    w.raw(n.seed);
    w.raw(n.nonce);
  }
  return w.take();
}

std::vector<NonceEntry> decode_ndb(const SchemeParams& p, ByteView data) {
  Reader r(data);
  const auto count = get_header(r, p, "NDB");
  check_fixed_body(r, count, p.seed_len() + p.nonce_len(), "NDB");
  std::vector<NonceEntry> out(count);
  for (auto& n : out) {
    n.seed = r.raw(p.seed_len());
    n.nonce = r.raw(p.nonce_len());
  }
  return out;
}

Bytes encode_gdb(const SchemeParams& p, const GroupDirectory& gdb) {
  Writer w;
  put_header(w, p, gdb.size());
  for (const auto& [key, entry] : gdb) {
    w.u16(static_cast<std::uint16_t>(key.field));
    w.bytes(key.group.bits);
    w.u32(static_cast<std::uint32_t>(entry.il.size()));
    for (auto id : entry.il) w.u64(id);
    w.bytes(entry.meta_ct);
  }
  return w.take();
}

GroupDirectory decode_gdb(const SchemeParams& p, ByteView data) {
  try {
    Reader r(data);
    const auto count = get_header(r, p, "GDB");
    GroupDirectory out;
    for (std::uint64_t i = 0; i < count; ++i) {
      GroupKey key;
      key.field = r.u16();
      if (key.field >= p.field_count) throw_io("GDB: group field out of range");
      key.group.bits = r.bytes();
      GroupEntry entry;
      const auto n = r.u32();
      if (n > r.remaining() / 8) throw_io("GDB: index list longer than file");
      entry.il.resize(n);
      for (auto& id : entry.il) id = r.u64();
      entry.meta_ct = r.bytes();
      if (!out.emplace(std::move(key), std::move(entry)).second) throw_io("GDB: duplicate group");
    }
    r.expect_end();
    return out;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw_io(std::string("GDB: ") + e.what());
  }
}

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw_io("cannot read " + path.string());
  return data;
}

void write_file_atomic(const fs::path& path, ByteView data) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw_io("cannot create " + tmp.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw_io("cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw_io("cannot rename " + tmp.string() + ": " + ec.message());
}

void save_edb(const fs::path& path, const SchemeParams& p, const std::vector<EncryptedRecord>& edb) {
  write_file_atomic(path, encode_edb(p, edb));
}
std::vector<EncryptedRecord> load_edb(const fs::path& path, const SchemeParams& p) {
  return decode_edb(p, read_file(path));
}
void save_ndb(const fs::path& path, const SchemeParams& p, const std::vector<NonceEntry>& ndb) {
  write_file_atomic(path, encode_ndb(p, ndb));
}
std::vector<NonceEntry> load_ndb(const fs::path& path, const SchemeParams& p) {
  return decode_ndb(p, read_file(path));
}
void save_gdb(const fs::path& path, const SchemeParams& p, const GroupDirectory& gdb) {
  write_file_atomic(path, encode_gdb(p, gdb));
}
GroupDirectory load_gdb(const fs::path& path, const SchemeParams& p) {
  return decode_gdb(p, read_file(path));
}

void save_store(const Layout& layout, const SchemeParams& p, const EncryptedStore& s) {
  save_edb(layout.edb(), p, s.edb);
  save_ndb(layout.ndb(), p, s.ndb);
  save_gdb(layout.gdb(), p, s.gdb);
}

EncryptedStore load_store(const Layout& layout, const SchemeParams& p) {
  EncryptedStore s{load_edb(layout.edb(), p), load_ndb(layout.ndb(), p), load_gdb(layout.gdb(), p)};
  if (s.edb.size() != s.ndb.size()) throw_io("EDB and NDB files hold different record counts");
  return s;
}

// ---- manifest --------------------------------------------------------------

nlohmann::json encoder_spec(const GroupEncoder& encoder) {
  if (auto* k = dynamic_cast<const KeyedGroupEncoder*>(&encoder)) {
    return {{"kind", "keyed"}, {"bits", k->bits()}};
  }
  if (auto* m = dynamic_cast<const ModuloGroupEncoder*>(&encoder)) {
    return {{"kind", "modulo"}, {"modulus", m->modulus()}};
  }
  if (auto* f = dynamic_cast<const FixedGroupEncoder*>(&encoder)) {
    nlohmann::json table = nlohmann::json::array();
    for (const auto& [k, g] : f->table()) {
      table.push_back({{"field", k.first}, {"element", to_hex(k.second)}, {"group", g}});
    }
    return {{"kind", "fixed"}, {"table", table}};
  }
  throw_parameter("unknown group encoder");
}

std::shared_ptr<const GroupEncoder> make_encoder(const nlohmann::json& spec,
                                                 const SchemeParams& params) {
  try {
    const auto kind = spec.at("kind").get<std::string>();
    if (kind == "keyed") return std::make_shared<KeyedGroupEncoder>(spec.at("bits").get<std::size_t>());
    if (kind == "modulo") {
      return std::make_shared<ModuloGroupEncoder>(spec.at("modulus").get<std::uint64_t>());
    }
    if (kind == "fixed") {
      FixedGroupEncoder::Table table;
      for (const auto& row : spec.at("table")) {
        auto field = row.at("field").get<std::size_t>();
        auto element = from_hex(row.at("element").get<std::string>());
        if (field >= params.field_count || element.size() != params.elem_len) {
          throw_parameter("group table entry does not fit the scheme");
        }
        table[{field, element}] = row.at("group").get<std::uint8_t>();
      }
      return std::make_shared<FixedGroupEncoder>(std::move(table));
    }
    throw_parameter("unknown encoder kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw_parameter(std::string("bad encoder spec: ") + e.what());
  }
}

Scheme scheme_of(const Manifest& m) { return Scheme{m.params, make_encoder(m.encoder, m.params)}; }

void save_manifest(const fs::path& path, const Manifest& m) {
  nlohmann::json j = {
      {"format", "pmcdb"},
      {"version", kVersion},
      {"params",
       {{"field_count", m.params.field_count},
        {"elem_len", m.params.elem_len},
        {"hash_len", m.params.hash_len},
        {"witness_len", m.params.witness_len},
        {"key_bits", m.params.key_bits},
        {"lambda", m.params.lambda}}},
      {"encoder", m.encoder},
      {"columns", m.columns},
  };
  write_file_atomic(path, to_bytes(j.dump(2) + "\n"));
}

Manifest load_manifest(const fs::path& path) {
  auto data = read_file(path);
  try {
    auto j = nlohmann::json::parse(data.begin(), data.end());
    if (j.at("format") != "pmcdb" || j.at("version") != kVersion) {
      throw_io(path.string() + ": not a supported manifest");
    }
    Manifest m;
    const auto& p = j.at("params");
    m.params.field_count = p.at("field_count");
    m.params.elem_len = p.at("elem_len");
    m.params.hash_len = p.at("hash_len");
    m.params.witness_len = p.at("witness_len");
    m.params.key_bits = p.at("key_bits");
    m.params.lambda = p.at("lambda");
    m.params.validate();
    m.encoder = j.at("encoder");
    m.columns = j.at("columns").get<std::vector<std::string>>();
    if (m.columns.size() != m.params.field_count) throw_io(path.string() + ": column count mismatch");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw_io(path.string() + ": " + e.what());
  }
}

// ---- keys ------------------------------------------------------------------

SecretKeys load_keys(const SchemeParams& p, const fs::path& key_file) {
  SecretKeys keys;
  const char* s1 = std::getenv("PMCDB_S1");
  const char* s2 = std::getenv("PMCDB_S2");
  try {
    if (s1 != nullptr && s2 != nullptr) {
      keys.s1 = from_hex(s1);
      keys.s2 = from_hex(s2);
    } else {
      auto data = read_file(key_file);
      auto j = nlohmann::json::parse(data.begin(), data.end());
      keys.s1 = from_hex(j.at("s1").get<std::string>());
      keys.s2 = from_hex(j.at("s2").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Auth, "bad key file " + key_file.string() + ": " + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(ErrorKind::Auth, std::string("bad key material: ") + e.what());
  }
  try {
    keys.validate(p);
  } catch (const Error& e) {
    throw Error(ErrorKind::Auth, e.what());
  }
  return keys;
}

void save_key_file(const fs::path& path, const SecretKeys& keys) {
  nlohmann::json j = {{"s1", to_hex(keys.s1)}, {"s2", to_hex(keys.s2)}};
  write_file_atomic(path, to_bytes(j.dump(2) + "\n"));
  fs::permissions(path, fs::perms::owner_read | fs::perms::owner_write,
                  fs::perm_options::replace);
}

// ---- CSV -------------------------------------------------------------------

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> lines;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool cell_started = false;
  std::size_t i = 0;
  auto end_row = [&] {
    row.push_back(std::move(cell));
    cell.clear();
    // skip blank lines
    if (!(row.size() == 1 && row[0].empty() && !cell_started)) lines.push_back(std::move(row));
    row.clear();
    cell_started = false;
  };
  if (text.starts_with("\xEF\xBB\xBF")) i = 3;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      cell_started = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell.clear();
      cell_started = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_row();
    } else {
      cell.push_back(c);
      cell_started = true;
    }
  }
  if (quoted) throw_parameter("unterminated quoted CSV cell");
  if (cell_started || !cell.empty() || !row.empty()) end_row();

  CsvTable t;
  if (lines.empty()) throw_parameter("CSV input is empty");
  t.header = std::move(lines.front());
  for (std::size_t r = 1; r < lines.size(); ++r) {
    if (lines[r].size() != t.header.size()) {
      throw_parameter("CSV row " + std::to_string(r) + " has " + std::to_string(lines[r].size()) +
                      " cells, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(lines[r]));
  }
  return t;
}

Ingested ingest_csv_text(std::string_view text, const SchemeParams& params) {
  auto t = parse_csv(text);
  if (t.header.size() != params.field_count) {
    throw_parameter("CSV has " + std::to_string(t.header.size()) + " columns, scheme expects " +
                    std::to_string(params.field_count));
  }
  Ingested out;
  out.columns = t.header;
  out.db.field_count = params.field_count;
  out.db.rows.reserve(t.rows.size());
  for (const auto& row : t.rows) out.db.rows.push_back(make_record(row, params));
  return out;
}

Ingested ingest_csv(const fs::path& path, const SchemeParams& params) {
  auto data = read_file(path);
  return ingest_csv_text(std::string_view(reinterpret_cast<const char*>(data.data()), data.size()),
                         params);
}

PlainDatabase integer_table(std::size_t rows, std::uint64_t distinct, std::size_t width,
                            const SchemeParams& params, Rng& rng) {
  if (params.field_count != 1) throw_parameter("integer table has a single field");
  if (distinct == 0) throw_parameter("need at least one distinct key");
  if (width > params.elem_len) throw_parameter("key width exceeds elem_len");
  PlainDatabase db;
  db.field_count = 1;
  db.rows.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    std::string text = std::to_string(rng.uniform(distinct));
    if (text.size() < width) text.insert(0, width - text.size(), '0');
    db.rows.push_back(Record{{pad_element(text, params)}, true});
  }
  return db;
}

std::shared_ptr<const FixedGroupEncoder> load_group_map(const fs::path& path,
                                                        const std::vector<std::string>& columns,
                                                        const SchemeParams& params) {
  auto data = read_file(path);
  FixedGroupEncoder::Table table;
  try {
    auto j = nlohmann::json::parse(data.begin(), data.end());
    for (const auto& [column, map] : j.items()) {
      auto it = std::find(columns.begin(), columns.end(), column);
      if (it == columns.end()) throw_parameter("group map names unknown column '" + column + "'");
      const auto f = static_cast<std::size_t>(it - columns.begin());
      for (const auto& [element, group] : map.items()) {
        table[{f, pad_element(element, params)}] = group.get<std::uint8_t>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw_parameter("bad group map " + path.string() + ": " + e.what());
  }
  return std::make_shared<FixedGroupEncoder>(std::move(table));
}

}  // namespace pmcdb::store
