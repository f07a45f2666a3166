#include <bitset>

#include <gtest/gtest.h>

#include "pmcdb/model.hpp"
#include "support.hpp"

using namespace pmcdb;
using pmcdb::fx::el;

TEST(Bytes, HexAndXor) {
  EXPECT_EQ(to_hex(from_hex("00ff10Ab")), "00ff10ab");
  EXPECT_THROW(from_hex("abc"), Error);
  EXPECT_THROW(from_hex("zz"), Error);
  EXPECT_EQ(xor_bytes(Bytes{1, 2}, Bytes{3, 3}), (Bytes{2, 1}));
  EXPECT_THROW(xor_bytes(Bytes{1}, Bytes{1, 2}), Error);
  EXPECT_EQ(hamming_distance(Bytes{0x0f}, Bytes{0x00, 0x0e}), 1u);
  EXPECT_EQ(hamming_distance(Bytes{0xff, 0x00}, Bytes{}), 8u);
  EXPECT_TRUE(constant_time_equal(Bytes{1, 2}, Bytes{1, 2}));
  EXPECT_FALSE(constant_time_equal(Bytes{1, 2}, Bytes{1, 3}));
  EXPECT_FALSE(constant_time_equal(Bytes{1, 2}, Bytes{1}));
}

TEST(Model, PadAndDisplay) {
  SchemeParams p;
  auto e = pad_element("Bob", p);
  EXPECT_EQ(e.size(), 16u);
  EXPECT_EQ(e[3], 0);
  EXPECT_EQ(display_element(e), "Bob");
  EXPECT_EQ(display_element(null_element(p)), "NULL");
  EXPECT_TRUE(is_null(null_element(p)));
  EXPECT_FALSE(is_null(e));
  EXPECT_THROW(pad_element(std::string(17, 'x'), p), Error);
  EXPECT_THROW(pad_element(std::string(16, '\xff'), p), Error);
  EXPECT_NO_THROW(pad_element(std::string(16, 'x'), p));

  auto r = make_record({"a", "b"}, fx::staff_params());
  EXPECT_TRUE(r.real);
  EXPECT_THROW(validate_record(r, p), Error);  // F = 1
}

namespace {

// Exhaustive scan over every group of the field, bit by bit.
std::optional<GroupKey> brute_closest(const GroupDirectory& gdb, std::size_t field,
                                      const GroupId& g) {
  auto bit = [](const Bytes& b, std::size_t i) {  // i-th bit from the right
    if (i / 8 >= b.size()) return false;
    return ((b[b.size() - 1 - i / 8] >> (i % 8)) & 1) != 0;
  };
  std::optional<GroupKey> best;
  std::size_t best_d = 0;
  for (const auto& [key, entry] : gdb) {
    if (key.field != field) continue;
    std::size_t d = 0;
    const auto width = 8 * std::max(key.group.bits.size(), g.bits.size());
    for (std::size_t i = 0; i < width; ++i) d += bit(key.group.bits, i) != bit(g.bits, i);
    if (!best || d < best_d || (d == best_d && key.group < best->group)) {
      best = key;
      best_d = d;
    }
  }
  return best;
}

}  // namespace

TEST(Model, ClosestGroupMatchesExhaustiveScan) {
  Rng rng = Rng::seeded(21);
  for (int trial = 0; trial < 200; ++trial) {
    GroupDirectory gdb;
    const std::size_t width = 1 + rng.uniform(2);
    const auto groups = rng.uniform(6);
    for (std::uint64_t i = 0; i < groups; ++i) {
      gdb[GroupKey{rng.uniform(2), GroupId{rng.bytes(width)}}] = GroupEntry{};
    }
    const std::size_t field = rng.uniform(2);
    GroupId probe{rng.bytes(width)};
    if (rng.uniform(4) == 0 && !gdb.empty()) probe = gdb.begin()->first.group;
    ASSERT_EQ(closest_group(gdb, field, probe), brute_closest(gdb, field, probe));
  }
}

TEST(Model, ClosestGroupTiesGoToSmallestId) {
  GroupDirectory gdb;
  gdb[GroupKey{0, GroupId{{0b01}}}] = {};
  gdb[GroupKey{0, GroupId{{0b10}}}] = {};
  auto got = closest_group(gdb, 0, GroupId{{0b00}});
  ASSERT_TRUE(got);
  EXPECT_EQ(got->group.bits, Bytes{0b01});
  EXPECT_FALSE(closest_group(gdb, 1, GroupId{{0}}));
}

// Real tags always verify; a uniform dummy tag verifies with probability
// 2^-256, so none of 2000 may.
TEST(Model, TagClassesMonteCarlo) {
  Rng rng = Rng::seeded(22);
  SchemeParams p;
  p.field_count = 2;
  auto s1 = rng.bytes(16);
  for (int i = 0; i < 2000; ++i) {
    auto n_tag = rng.bytes(p.tag_len());
    auto real = tag_make(true, n_tag, s1, p, rng);
    auto dummy = tag_make(false, n_tag, s1, p, rng);
    ASSERT_TRUE(tag_check(real, n_tag, s1, p));
    ASSERT_FALSE(tag_check(dummy, n_tag, s1, p));
    ASSERT_FALSE(tag_check(real, rng.bytes(p.tag_len()), s1, p));
    ASSERT_FALSE(tag_check(real, n_tag, rng.bytes(16), p));
  }
}

TEST(Model, MetaRoundTrip) {
  Rng rng = Rng::seeded(23);
  SchemeParams p;
  auto s1 = rng.bytes(16);
  GroupMeta meta{{el("a", p), el("b", p)}, 7};
  EXPECT_EQ(parse_meta(serialize_meta(meta)), meta);
  EXPECT_EQ(open_meta(seal_meta(meta, s1, rng), s1), meta);
  EXPECT_EQ(parse_meta(serialize_meta(GroupMeta{})), GroupMeta{});
  auto bytes = serialize_meta(meta);
  bytes.pop_back();
  EXPECT_THROW(parse_meta(bytes), Error);
}

TEST(Model, CensusAndUniverse) {
  auto p = fx::staff_params();
  PlainDatabase db = fx::staff_db();
  db.rows.push_back(Record{{el("Bill"), null_element(p)}, false});
  auto real = occurrence_census(db, 0);
  EXPECT_EQ(real.at(el("Bob")), 2u);
  EXPECT_EQ(real.at(el("Bill")), 1u);
  auto all = occurrence_census(db, 0, CensusScope::AllRows);
  EXPECT_EQ(all.at(el("Bill")), 2u);
  EXPECT_EQ(occurrence_census(db, 1, CensusScope::AllRows).size(), 4u);  // NULL not counted
  db.predefined = {{el("Zed")}, {}};
  EXPECT_EQ(universe(db, 0).size(), 5u);
  EXPECT_TRUE(universe(db, 0).contains(el("Zed")));
}
