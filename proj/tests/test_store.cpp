#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "pmcdb/admin.hpp"
#include "pmcdb/error.hpp"
#include "support.hpp"

using namespace pmcdb;
using namespace pmcdb::fx;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("pmcdb_store_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ErrorKind::Protocol;
}

EncryptedStore staff_store(std::uint64_t seed, SecretKeys* keys_out = nullptr) {
  Rng rng = Rng::seeded(seed);
  auto scheme = staff_scheme();
  auto keys = generate_keys(scheme.params, rng);
  if (keys_out) *keys_out = keys;
  return admin::setup(scheme, keys, staff_db(), rng).store;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

}  // namespace

TEST(Store, EncodeDecodeRoundTrip) {
  const auto p = staff_params();
  auto s = staff_store(111);
  EXPECT_EQ(store::decode_edb(p, store::encode_edb(p, s.edb)), s.edb);
  EXPECT_EQ(store::decode_ndb(p, store::encode_ndb(p, s.ndb)), s.ndb);
  EXPECT_EQ(store::decode_gdb(p, store::encode_gdb(p, s.gdb)), s.gdb);
  EXPECT_TRUE(store::decode_edb(p, store::encode_edb(p, {})).empty());
}

TEST(Store, FileSizesFollowTheLayout) {
  const auto p = staff_params();
  auto s = staff_store(112);
  TempDir t;
  store::Layout layout{t.path};
  store::save_store(layout, p, s);
  // 6 records of 2*16 + 48 bytes after the header
  EXPECT_EQ(fs::file_size(layout.edb()), 6u * 80u + 20u);
  EXPECT_EQ(fs::file_size(layout.ndb()), 6u * (16u + 80u) + 20u);
  EXPECT_FALSE(fs::exists(layout.edb().string() + ".tmp"));
  auto back = store::load_store(layout, p);
  EXPECT_EQ(back.edb, s.edb);
  EXPECT_EQ(back.ndb, s.ndb);
  EXPECT_EQ(back.gdb, s.gdb);

  auto head = store::read_file(layout.edb());
  EXPECT_EQ(Bytes(head.begin(), head.begin() + 4), to_bytes("PMCD"));
}

TEST(Store, DamagedFilesAreIoErrors) {
  const auto p = staff_params();
  auto s = staff_store(113);
  const auto edb = store::encode_edb(p, s.edb);
  const auto gdb = store::encode_gdb(p, s.gdb);
  for (std::size_t cut : {0ul, 3ul, 19ul, 20ul, 21ul, edb.size() - 1}) {
    EXPECT_EQ(kind_of([&] { store::decode_edb(p, ByteView(edb).first(cut)); }), ErrorKind::Io)
        << cut;
  }
  for (std::size_t cut = 0; cut < gdb.size(); cut += 7) {
    EXPECT_EQ(kind_of([&] { store::decode_gdb(p, ByteView(gdb).first(cut)); }), ErrorKind::Io)
        << cut;
  }
  Bytes magic = edb;
  magic[0] = 'X';
  EXPECT_EQ(kind_of([&] { store::decode_edb(p, magic); }), ErrorKind::Io);
  Bytes version = edb;
  version[5] = 9;
  EXPECT_EQ(kind_of([&] { store::decode_edb(p, version); }), ErrorKind::Io);
  SchemeParams other = p;
  other.field_count = 3;
  EXPECT_EQ(kind_of([&] { store::decode_edb(other, edb); }), ErrorKind::Io);
  EXPECT_EQ(kind_of([&] { store::decode_ndb(p, edb); }), ErrorKind::Io);

  EXPECT_EQ(kind_of([&] { store::encode_edb(p, {EncryptedRecord{Bytes(5)}}); }),
            ErrorKind::Parameter);
  EXPECT_EQ(kind_of([&] { store::read_file("/nonexistent/pmcdb/edb.bin"); }), ErrorKind::Io);

  TempDir t;
  store::Layout layout{t.path};
  store::save_store(layout, p, s);
  auto short_ndb = s.ndb;
  short_ndb.pop_back();
  store::save_ndb(layout.ndb(), p, short_ndb);
  EXPECT_EQ(kind_of([&] { store::load_store(layout, p); }), ErrorKind::Io);
}

TEST(Store, ManifestAndEncoders) {
  TempDir t;
  SchemeParams p = staff_params();
  p.lambda = 4;
  const std::vector<std::shared_ptr<const GroupEncoder>> encoders = {
      std::make_shared<KeyedGroupEncoder>(3), std::make_shared<ModuloGroupEncoder>(5),
      staff_scheme().encoder};
  Rng rng = Rng::seeded(114);
  auto keys = generate_keys(p, rng);
  for (const auto& enc : encoders) {
    store::Manifest m{p, store::encoder_spec(*enc), {"Name", "Age"}};
    store::save_manifest(t.path / "manifest.json", m);
    auto back = store::load_manifest(t.path / "manifest.json");
    EXPECT_EQ(back.columns, m.columns);
    EXPECT_EQ(back.params.lambda, 4u);
    EXPECT_EQ(back.encoder, m.encoder);
    auto scheme = store::scheme_of(back);
    for (const char* v : {"Bob", "Alice", "27", "33", "Zed"}) {
      for (std::size_t f = 0; f < 2; ++f) {
        EXPECT_EQ(scheme.group_of(keys.s1, f, el(v)), enc->encode(keys.s1, f, el(v))) << v;
      }
    }
  }
  EXPECT_EQ(kind_of([&] { store::make_encoder({{"kind", "rot13"}}, p); }), ErrorKind::Parameter);
  EXPECT_EQ(kind_of([&] { store::make_encoder({{"kind", "keyed"}}, p); }), ErrorKind::Parameter);

  write_text(t.path / "bad.json", R"({"format": "pmcdb", "version": 1)");
  EXPECT_EQ(kind_of([&] { store::load_manifest(t.path / "bad.json"); }), ErrorKind::Io);
  store::Manifest m{p, store::encoder_spec(*encoders[0]), {"only"}};
  store::save_manifest(t.path / "cols.json", m);
  EXPECT_EQ(kind_of([&] { store::load_manifest(t.path / "cols.json"); }), ErrorKind::Io);
}

TEST(Store, KeyFiles) {
  TempDir t;
  const auto p = staff_params();
  Rng rng = Rng::seeded(115);
  auto keys = generate_keys(p, rng);
  const auto path = t.path / "keys.json";
  store::save_key_file(path, keys);
  EXPECT_EQ(fs::status(path).permissions() & fs::perms::all,
            fs::perms::owner_read | fs::perms::owner_write);
  ::unsetenv("PMCDB_S1");
  ::unsetenv("PMCDB_S2");
  auto back = store::load_keys(p, path);
  EXPECT_EQ(back.s1, keys.s1);
  EXPECT_EQ(back.s2, keys.s2);

  auto other = generate_keys(p, rng);
  ::setenv("PMCDB_S1", to_hex(other.s1).c_str(), 1);
  ::setenv("PMCDB_S2", to_hex(other.s2).c_str(), 1);
  back = store::load_keys(p, t.path / "missing.json");
  EXPECT_EQ(back.s1, other.s1);
  ::setenv("PMCDB_S2", "zz", 1);
  EXPECT_EQ(kind_of([&] { store::load_keys(p, path); }), ErrorKind::Auth);
  ::setenv("PMCDB_S2", "00ff", 1);
  EXPECT_EQ(kind_of([&] { store::load_keys(p, path); }), ErrorKind::Auth);
  ::unsetenv("PMCDB_S1");
  ::unsetenv("PMCDB_S2");

  write_text(t.path / "bad.json", R"({"s1": "00"})");
  EXPECT_EQ(kind_of([&] { store::load_keys(p, t.path / "bad.json"); }), ErrorKind::Auth);
  EXPECT_EQ(kind_of([&] { store::load_keys(p, t.path / "missing.json"); }), ErrorKind::Io);
}

TEST(Store, CsvParsing) {
  auto t = store::parse_csv("a,b\r\n\"x,1\",\"say \"\"hi\"\"\"\n\n,\n");
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0], (std::vector<std::string>{"x,1", "say \"hi\""}));
  EXPECT_EQ(t.rows[1], (std::vector<std::string>{"", ""}));
  EXPECT_EQ(store::parse_csv("\xEF\xBB\xBFk\n1").header, std::vector<std::string>{"k"});

  EXPECT_EQ(kind_of([] { store::parse_csv(""); }), ErrorKind::Parameter);
  EXPECT_EQ(kind_of([] { store::parse_csv("a,b\n\"open,1\n"); }), ErrorKind::Parameter);
  EXPECT_EQ(kind_of([] { store::parse_csv("a,b\n1,2,3\n"); }), ErrorKind::Parameter);
  EXPECT_EQ(kind_of([] { store::ingest_csv_text("a,b,c\n1,2,3\n", staff_params()); }),
            ErrorKind::Parameter);

  auto in = store::ingest_csv_text("Name,Age\nBob,27\n", staff_params());
  EXPECT_EQ(in.columns, (std::vector<std::string>{"Name", "Age"}));
  ASSERT_EQ(in.db.rows.size(), 1u);
  EXPECT_EQ(in.db.rows[0], row({"Bob", "27"}));
}

TEST(Store, IntegerTable) {
  SchemeParams p;
  Rng rng = Rng::seeded(116);
  auto db = store::integer_table(500, 7, 4, p, rng);
  ASSERT_EQ(db.rows.size(), 500u);
  std::set<std::string> seen;
  for (const auto& r : db.rows) {
    auto s = display_element(r.elements[0]);
    ASSERT_EQ(s.size(), 4u);
    ASSERT_LT(std::stoul(s), 7u);
    seen.insert(s);
  }
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_EQ(kind_of([&] { store::integer_table(1, 0, 1, p, rng); }), ErrorKind::Parameter);
  EXPECT_EQ(kind_of([&] { store::integer_table(1, 2, 17, p, rng); }), ErrorKind::Parameter);
  EXPECT_EQ(kind_of([&] { store::integer_table(1, 2, 1, staff_params(), rng); }),
            ErrorKind::Parameter);
}

TEST(Store, GroupMapErrors) {
  TempDir t;
  write_text(t.path / "unknown.json", R"({"Salary": {"1": 0}})");
  EXPECT_EQ(kind_of([&] {
              store::load_group_map(t.path / "unknown.json", {"Name", "Age"}, staff_params());
            }),
            ErrorKind::Parameter);
  write_text(t.path / "bad.json", R"({"Name": {"Bob": "one"}})");
  EXPECT_EQ(kind_of([&] {
              store::load_group_map(t.path / "bad.json", {"Name", "Age"}, staff_params());
            }),
            ErrorKind::Parameter);
}
