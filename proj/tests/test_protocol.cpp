// Full protocol runs over the in-process bus.

#include <atomic>
#include <chrono>
#include <thread>

#include <gtest/gtest.h>

#include "pmcdb/deployment.hpp"
#include "support.hpp"

using namespace pmcdb;
using namespace pmcdb::fx;

namespace {

std::unique_ptr<Deployment> staff(std::uint64_t seed) {
  Rng rng = Rng::seeded(seed);
  auto scheme = staff_scheme();
  auto keys = generate_keys(scheme.params, rng);
  return Deployment::build(scheme, keys, staff_db(), rng);
}

std::unique_ptr<Deployment> random_deployment(Rng& rng, std::size_t rows, std::size_t bits) {
  SchemeParams p;
  p.field_count = 2;
  Scheme scheme{p, std::make_shared<KeyedGroupEncoder>(bits)};
  auto keys = generate_keys(p, rng);
  return Deployment::build(scheme, keys, random_db(rng, rows, 2, {12, 7}, p), rng);
}

bool padding_ok(Deployment& d) {
  std::string why;
  const bool ok = admin::padding_holds(d.groups(), d.decrypt_all(), &why);
  if (!ok) ADD_FAILURE() << why;
  return ok;
}

std::vector<wire::MsgType> types_to(const std::vector<LogEntry>& log, Role to) {
  std::vector<wire::MsgType> out;
  for (const auto& e : log) {
    if (e.to == to) out.push_back(e.msg.type);
  }
  return out;
}

}  // namespace

TEST(Protocol, StaffSelects) {
  auto d = staff(71);
  auto& u = d->user();
  EXPECT_EQ(sorted(u.run_select({QueryType::Select, 0, el("Bob")})),
            sorted({row({"Bob", "27"}), row({"Bob", "33"})}));
  EXPECT_EQ(sorted(u.run_select({QueryType::Select, 1, el("27")})),
            sorted({row({"Alice", "27"}), row({"Bob", "27"})}));
  EXPECT_TRUE(u.run_select({QueryType::Select, 0, el("Nobody")}).empty());
  EXPECT_THROW(u.run_select({QueryType::Select, 2, el("x")}), Error);
  EXPECT_THROW(u.select({QueryType::Delete, 0, el("x")}), Error);
}

TEST(Protocol, SelectMessageFlow) {
  auto d = staff(72);
  d->log().clear();
  d->user().run_select({QueryType::Select, 0, el("Anna")});
  auto log = d->log().entries();
  EXPECT_EQ(types_to(log, Role::Sss),
            (std::vector<wire::MsgType>{wire::MsgType::Query, wire::MsgType::WitnessSet,
                                        wire::MsgType::FetchRecords,
                                        wire::MsgType::ShuffledRecords}));
  EXPECT_EQ(types_to(log, Role::Iws),
            (std::vector<wire::MsgType>{wire::MsgType::NonceReq, wire::MsgType::PreShuffle}));
  EXPECT_EQ(types_to(log, Role::Rss),
            (std::vector<wire::MsgType>{wire::MsgType::ShuffleData, wire::MsgType::ShuffleReq}));
  for (const auto& e : log) {
    if (e.msg.type == wire::MsgType::WitnessSet && e.to == Role::Sss) {
      EXPECT_EQ(e.from, Role::Iws);
    }
  }
  for (std::size_t i = 1; i < log.size(); ++i) EXPECT_EQ(log[i].seq, log[i - 1].seq + 1);
}

// Plaintext shadow against every element of the universe, with shuffles
// between queries.
TEST(Protocol, SelectMatchesShadowOnRandomStores) {
  Rng rng = Rng::seeded(73);
  for (int store = 0; store < 4; ++store) {
    auto d = random_deployment(rng, 40 + rng.uniform(60), rng.uniform(3));
    const auto shadow = d->decrypt_all();
    PlainDatabase db{2, real_rows(shadow), {}};
    for (std::size_t f = 0; f < 2; ++f) {
      for (const auto& e : universe(db, f)) {
        auto t = d->user().select({QueryType::Select, f, e});
        ASSERT_EQ(sorted(t.records), shadow_select(shadow, f, e));
        auto meta = d->groups().at(t.key);
        ASSERT_EQ(t.result_size, meta.tau);
      }
    }
    EXPECT_EQ(real_rows(d->decrypt_all()), real_rows(shadow));
  }
}

TEST(Protocol, InsertThenSelect) {
  auto d = staff(74);
  auto t = d->user().insert(row({"Bob", "27"}));
  EXPECT_EQ(t.dummy_count, 1u);
  EXPECT_EQ(t.ids, (std::vector<RecordId>{6, 7}));
  EXPECT_EQ(d->decrypt_all().size(), 8u);
  EXPECT_EQ(d->user().run_select({QueryType::Select, 0, el("Bob")}).size(), 3u);
  EXPECT_EQ(d->user().run_select({QueryType::Select, 1, el("27")}).size(), 3u);
  EXPECT_TRUE(padding_ok(*d));

  // an element no group has seen yet
  d->user().run_insert(row({"Zoe", "41"}));
  EXPECT_EQ(sorted(d->user().run_select({QueryType::Select, 0, el("Zoe")})),
            sorted({row({"Zoe", "41"})}));
  EXPECT_EQ(d->user().run_select({QueryType::Select, 1, el("41")}).size(), 1u);
  EXPECT_TRUE(padding_ok(*d));
  EXPECT_THROW(d->user().run_insert(row({"a"}, SchemeParams{})), Error);
}

TEST(Protocol, DeleteThenSelect) {
  auto d = staff(75);
  EXPECT_EQ(d->user().run_delete({QueryType::Delete, 0, el("Bob")}), 2u);
  EXPECT_TRUE(d->user().run_select({QueryType::Select, 0, el("Bob")}).empty());
  EXPECT_EQ(sorted(d->user().run_select({QueryType::Select, 1, el("27")})),
            sorted({row({"Alice", "27"})}));
  EXPECT_EQ(d->user().run_delete({QueryType::Delete, 0, el("Bob")}), 0u);
  EXPECT_EQ(real_rows(d->decrypt_all()).size(), 3u);
  EXPECT_TRUE(padding_ok(*d));
  // size pattern unchanged: deleted rows still count as padding
  auto t = d->user().select({QueryType::Select, 0, el("Bill")});
  EXPECT_EQ(t.result_size, 2u);
}

TEST(Protocol, SizePatternUniformWithinGroups) {
  auto d = staff(76);
  for (int round = 0; round < 5; ++round) {
    for (const auto& [key, meta] : d->groups()) {
      for (const auto& e : meta.elements) {
        auto t = d->user().select({QueryType::Select, key.field, e});
        EXPECT_EQ(t.key, key);
        EXPECT_EQ(t.result_size, meta.tau) << display_element(e);
      }
    }
  }
}

TEST(Protocol, StaleWitnessesMatchNothingAfterShuffle) {
  auto d = staff(77);
  const auto& p = d->scheme().params;
  auto t = d->user().select({QueryType::Select, 0, el("Bob")}, false);
  ASSERT_EQ(t.matched.size(), 2u);
  // replay before the shuffle still matches (control)
  EXPECT_EQ(d->sss().search(t.session.eq, t.il, t.en).matched, t.matched);
  d->user().shuffle(t.key);
  auto replay = d->sss().search(t.session.eq, t.il, t.en);
  EXPECT_TRUE(replay.matched.empty());
  // nor anywhere else in EDB
  std::set<Bytes> stale;
  for (const auto& x : t.en) stale.insert(x.w);
  for (const auto& rec : d->sss().edb()) {
    auto block = xor_bytes(rec.field(0, p), t.session.eq.e_star);
    EXPECT_FALSE(stale.contains(public_hash(block, p.witness_len)));
  }
}

TEST(Protocol, ShuffleConservesPlaintext) {
  Rng rng = Rng::seeded(78);
  auto d = random_deployment(rng, 60, 1);
  for (int i = 0; i < 10; ++i) {
    auto before = d->decrypt_all();
    auto edb = d->sss().edb();
    auto groups = d->groups();
    auto it = groups.begin();
    std::advance(it, rng.uniform(groups.size()));
    const auto& e = *std::next(it->second.elements.begin(),
                               static_cast<long>(rng.uniform(it->second.elements.size())));
    auto t = d->user().select({QueryType::Select, it->first.field, e});
    auto after = d->decrypt_all();
    std::sort(before.begin(), before.end());
    std::sort(after.begin(), after.end());
    ASSERT_EQ(before, after);
    for (auto id : t.il) ASSERT_NE(d->sss().edb()[id], edb[id]);
  }
}

// The SSS must never see an index list in the IWS's post-shuffle order.
TEST(Protocol, ShufflePlansTravelSorted) {
  auto d = staff(79);
  for (int i = 0; i < 4; ++i) d->user().run_select({QueryType::Select, 0, el("Bob")});
  for (const auto& e : d->log().entries()) {
    if (e.msg.type == wire::MsgType::FetchRecords) {
      auto il = wire::decode_fetch_records(e.msg).il;
      EXPECT_TRUE(std::is_sorted(il.begin(), il.end()));
    }
    if (e.msg.type == wire::MsgType::WitnessSet) {
      auto il = wire::decode_witness_set(e.msg).il;
      EXPECT_TRUE(std::is_sorted(il.begin(), il.end()));
    }
  }
}

TEST(Protocol, RevokedUserIsRefused) {
  auto d = staff(80);
  auto eve = d->connect("eve");
  EXPECT_EQ(eve->run_select({QueryType::Select, 0, el("Bob")}).size(), 2u);
  d->revoke("eve");
  for (auto op : {std::function<void()>([&] { eve->run_select({QueryType::Select, 0, el("Bob")}); }),
                  std::function<void()>([&] { eve->run_insert(row({"Eve", "30"})); }),
                  std::function<void()>([&] { eve->run_delete({QueryType::Delete, 0, el("Bob")}); })}) {
    try {
      op();
      FAIL() << "revoked user was served";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Revoked);
      EXPECT_NE(e.origin(), Role::User);
    }
  }
  // others are unaffected and the store is intact
  EXPECT_EQ(d->user().run_select({QueryType::Select, 0, el("Bob")}).size(), 2u);
  EXPECT_TRUE(padding_ok(*d));
}

TEST(Protocol, CompactKeepsRowsAndPadding) {
  Rng rng = Rng::seeded(81);
  auto d = random_deployment(rng, 80, 2);
  for (int i = 0; i < 4; ++i) {
    auto rows = real_rows(d->decrypt_all());
    const auto& victim = rows[rng.uniform(rows.size())];
    const std::size_t f = rng.uniform(2);
    d->user().run_delete({QueryType::Delete, f, victim.elements[f]});
  }
  const auto before = real_rows(d->decrypt_all());
  const auto n = d->sss().edb().size();
  auto report = d->compact();
  EXPECT_EQ(real_rows(d->decrypt_all()), before);
  EXPECT_EQ(d->sss().edb().size(), n - report.removed_records);
  EXPECT_GT(report.removed_records + report.nulled_slots, 0u);
  EXPECT_TRUE(padding_ok(*d));
  PlainDatabase db{2, before, {}};
  for (std::size_t f = 0; f < 2; ++f) {
    for (const auto& e : universe(db, f)) {
      ASSERT_EQ(sorted(d->user().run_select({QueryType::Select, f, e})), shadow_select(before, f, e));
    }
  }
}

TEST(Protocol, ConcurrentUsers) {
  Rng rng = Rng::seeded(82);
  auto d = random_deployment(rng, 60, 2);
  const auto shadow = d->decrypt_all();
  PlainDatabase db{2, real_rows(shadow), {}};
  std::vector<std::unique_ptr<Orchestrator>> users;
  for (int i = 0; i < 3; ++i) users.push_back(d->connect("u" + std::to_string(i)));
  std::atomic<int> wrong{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 3; ++i) {
    threads.emplace_back([&, i] {
      const auto u = universe(db, i % 2);
      const std::vector<Element> elems(u.begin(), u.end());
      for (int k = 0; k < 15; ++k) {
        const auto& e = elems[(k * 7 + i) % elems.size()];
        auto got = sorted(users[i]->run_select({QueryType::Select, std::size_t(i % 2), e}));
        if (got != shadow_select(shadow, i % 2, e)) ++wrong;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(wrong.load(), 0);
  EXPECT_EQ(real_rows(d->decrypt_all()), real_rows(shadow));
  EXPECT_TRUE(padding_ok(*d));
}

TEST(Locks, GroupsOfOneFieldInterleave) {
  LockManager locks;
  GroupKey a{0, GroupId{{0}}}, b{0, GroupId{{1}}}, c{1, GroupId{{0}}};
  auto ga = locks.lock_group(a);
  std::atomic<bool> got_b{false}, got_c{false};
  std::thread tb([&] {
    auto g = locks.lock_group(b);
    got_b = true;
  });
  tb.join();
  EXPECT_TRUE(got_b);
  std::thread tc([&] {
    auto g = locks.lock_group(c);
    got_c = true;
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  EXPECT_FALSE(got_c);  // other field waits
  { auto drop = std::move(ga); }
  tc.join();
  EXPECT_TRUE(got_c);
}

TEST(Locks, SameGroupAndExclusiveWait) {
  LockManager locks;
  GroupKey a{0, GroupId{{0}}};
  std::atomic<int> stage{0};
  {
    auto g = locks.lock_group(a);
    std::thread t([&] {
      auto g2 = locks.lock_group(a);
      stage = 1;
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    EXPECT_EQ(stage.load(), 0);
    { auto drop = std::move(g); }
    t.join();
    EXPECT_EQ(stage.load(), 1);
  }
  auto x = locks.lock_exclusive();
  std::thread t([&] {
    auto g = locks.lock_field(1);
    stage = 2;
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  EXPECT_EQ(stage.load(), 1);
  { auto drop = std::move(x); }
  t.join();
  EXPECT_EQ(stage.load(), 2);
}

TEST(Locks, QueryLocksFieldUntilLearned) {
  LockManager locks;
  GroupId raw{{0xFF}};
  GroupKey served{0, GroupId{{1}}}, other{0, GroupId{{0}}};
  std::atomic<bool> got{false};
  {
    auto q = locks.lock_query(0, raw);  // unknown: whole field
    std::thread t([&] {
      auto g = locks.lock_group(other);
      got = true;
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    EXPECT_FALSE(got);
    locks.learn(0, raw, served);
    { auto drop = std::move(q); }
    t.join();
  }
  auto q = locks.lock_query(0, raw);  // now only the served group
  std::thread t([&] { auto g = locks.lock_group(other); });
  t.join();
}
