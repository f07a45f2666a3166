#include <gtest/gtest.h>

#include "pmcdb/admin.hpp"
#include "support.hpp"

using namespace pmcdb;
using namespace pmcdb::fx;

namespace {

GroupKey key(std::size_t field, std::uint8_t g) { return GroupKey{field, GroupId{{g}}}; }

}  // namespace

TEST(Admin, StaffGroupGen) {
  Rng rng = Rng::seeded(31);
  auto keys = generate_keys(staff_params(), rng);
  auto gg = admin::group_gen(staff_scheme(), keys, staff_db());
  ASSERT_EQ(gg.groups.size(), 4u);
  EXPECT_EQ(gg.groups.at(key(0, 0)).elements, (std::set<Element>{el("Alice"), el("Anna")}));
  EXPECT_EQ(gg.groups.at(key(0, 1)).tau, 2u);
  EXPECT_EQ(gg.groups.at(key(1, 0)).tau, 2u);
  EXPECT_EQ(gg.groups.at(key(1, 1)).tau, 1u);
}

TEST(Admin, StaffSetup) {
  Rng rng = Rng::seeded(32);
  const auto scheme = staff_scheme();
  auto keys = generate_keys(scheme.params, rng);
  auto out = admin::setup(scheme, keys, staff_db(), rng);
  EXPECT_EQ(out.sigma_max, 1u);
  ASSERT_EQ(out.store.edb.size(), 6u);
  ASSERT_EQ(out.store.ndb.size(), 6u);

  auto rows = admin::decrypt_store(scheme.params, keys, out.store.edb, out.store.ndb);
  std::vector<Record> dummies;
  for (const auto& r : rows) {
    if (!r.real) dummies.push_back(r);
  }
  ASSERT_EQ(dummies.size(), 1u);
  EXPECT_EQ(dummies[0].elements, (std::vector<Element>{el("Bill"), el("25")}));
  EXPECT_EQ(real_rows(rows), sorted(staff_db().rows));

  auto groups = admin::open_directory(out.store.gdb, keys);
  const std::vector<std::pair<GroupKey, std::pair<std::uint64_t, std::size_t>>> want = {
      {key(0, 0), {1, 2}}, {key(0, 1), {2, 4}}, {key(1, 0), {2, 4}}, {key(1, 1), {1, 2}}};
  for (const auto& [k, v] : want) {
    EXPECT_EQ(groups.at(k).tau, v.first) << to_string(k);
    EXPECT_EQ(out.store.gdb.at(k).il.size(), v.second) << to_string(k);
  }
  EXPECT_TRUE(admin::padding_holds(groups, rows));
}

// IL of every group lists exactly the records whose element maps there.
TEST(Admin, IndexListsPartitionRecords) {
  Rng rng = Rng::seeded(33);
  SchemeParams p;
  p.field_count = 2;
  Scheme scheme{p, std::make_shared<KeyedGroupEncoder>(2)};
  auto keys = generate_keys(p, rng);
  auto db = random_db(rng, 60, 2, {9, 5}, p);
  auto out = admin::setup(scheme, keys, db, rng);
  auto rows = admin::decrypt_store(p, keys, out.store.edb, out.store.ndb);
  for (std::size_t f = 0; f < 2; ++f) {
    std::vector<RecordId> all;
    for (const auto& [k, entry] : out.store.gdb) {
      if (k.field != f) continue;
      EXPECT_TRUE(std::is_sorted(entry.il.begin(), entry.il.end()));
      for (auto id : entry.il) {
        all.push_back(id);
        ASSERT_LT(id, rows.size());
        const auto& e = rows[id].elements[f];
        if (!is_null(e)) {
          ASSERT_EQ(*closest_group(out.store.gdb, f, scheme.group_of(keys.s1, f, e)), k);
        }
      }
    }
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), rows.size());
    for (std::size_t i = 0; i < all.size(); ++i) ASSERT_EQ(all[i], i);
  }
}

// Property: Σ_max from dummy_gen against the brute-force sum, and equal
// occurrences after padding, over random tables.
TEST(Admin, SigmaMaxMatchesBruteForce) {
  Rng rng = Rng::seeded(34);
  for (int trial = 0; trial < 40; ++trial) {
    SchemeParams p;
    p.field_count = 1 + rng.uniform(3);
    const std::size_t bits = rng.uniform(5);
    Scheme scheme{p, std::make_shared<KeyedGroupEncoder>(bits)};
    auto keys = generate_keys(p, rng);
    std::vector<std::size_t> alphabet;
    for (std::size_t f = 0; f < p.field_count; ++f) alphabet.push_back(1 + rng.uniform(30));
    auto db = random_db(rng, 1 + rng.uniform(300), p.field_count, alphabet, p);

    auto gg = admin::group_gen(scheme, keys, db);
    auto dg = admin::dummy_gen(scheme, db, gg.groups, rng);
    ASSERT_EQ(dg.sigma_max, brute_sigma_max(scheme, keys, db)) << "trial " << trial;
    ASSERT_EQ(dg.padded.rows.size(), db.rows.size() + dg.sigma_max);
    ASSERT_TRUE(occurrences_equal(scheme, keys, dg.padded.rows, p.field_count));
    ASSERT_TRUE(admin::padding_holds(gg.groups, dg.padded.rows));
    ASSERT_EQ(real_rows(dg.padded.rows), sorted(db.rows));
  }
}

TEST(Admin, PaddingHoldsDetectsImbalance) {
  auto p = staff_params();
  admin::GroupTable groups;
  groups[key(0, 0)] = GroupMeta{{el("a"), el("b")}, 1};
  std::vector<Record> rows = {row({"a", "x"}), row({"b", "x"})};
  EXPECT_TRUE(admin::padding_holds(groups, rows));
  rows.push_back(row({"a", "y"}));
  std::string why;
  EXPECT_FALSE(admin::padding_holds(groups, rows, &why));
  EXPECT_FALSE(why.empty());
}

TEST(Admin, LambdaWarning) {
  Rng rng = Rng::seeded(35);
  SchemeParams p;
  p.field_count = 2;
  p.lambda = 3;
  auto scheme = staff_scheme();
  scheme.params = p;
  auto keys = generate_keys(p, rng);
  auto gg = admin::group_gen(scheme, keys, staff_db());
  EXPECT_EQ(gg.warnings.size(), 4u);  // every Staff group has two elements
}

TEST(Admin, EmptyTableWithPredefinedElements) {
  Rng rng = Rng::seeded(36);
  SchemeParams p;
  Scheme scheme{p, std::make_shared<KeyedGroupEncoder>(1)};
  auto keys = generate_keys(p, rng);
  PlainDatabase db{1, {}, {{el("x", p), el("y", p), el("z", p)}}};
  auto out = admin::setup(scheme, keys, db, rng);
  EXPECT_TRUE(out.store.edb.empty());
  auto groups = admin::open_directory(out.store.gdb, keys);
  std::size_t elements = 0;
  for (const auto& [k, m] : groups) {
    elements += m.elements.size();
    EXPECT_EQ(m.tau, 0u);
  }
  EXPECT_EQ(elements, 3u);
}
