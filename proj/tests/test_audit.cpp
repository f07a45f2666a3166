#include <gtest/gtest.h>

#include "pmcdb/auditor.hpp"
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

// An IWS that forgets to blind t: witness sets carry the raw NDB seeds,
// which the user then relays to the SSS.
class UnblindedIws : public Service {
 public:
  explicit UnblindedIws(IwsState& state) : state_(state), inner_(state) {}
  Role role() const override { return Role::Iws; }

 protected:
  wire::Message dispatch(const wire::Message& msg) override {
    auto reply = inner_.handle(msg);
    if (reply.type != wire::MsgType::WitnessSet) return reply;
    auto ws = wire::decode_witness_set(reply);
    for (std::size_t i = 0; i < ws.il.size(); ++i) ws.en[i].t = state_.ndb()[ws.il[i]].seed;
    return wire::encode(ws);
  }

 private:
  IwsState& state_;
  IwsService inner_;
};

}  // namespace

TEST(Audit, SizePattern) {
  auto d = staff(91);
  auto r = audit::audit_size_pattern(*d);
  EXPECT_TRUE(r.uniform());
  EXPECT_EQ(r.groups.size(), 4u);
  EXPECT_EQ(r.queries, 8u);
  for (const auto& g : r.groups) {
    for (const auto& [e, n] : g.sizes) EXPECT_EQ(n, g.tau) << e;
  }
}

TEST(Audit, ForwardBackwardUntrace) {
  auto d = staff(92);
  Rng rng = Rng::seeded(93);
  auto fwd = audit::audit_forward(*d, 30, rng);
  EXPECT_TRUE(fwd.ok());
  EXPECT_GT(fwd.insert_trials, 0u);
  auto bwd = audit::audit_backward(*d, 60, rng);
  EXPECT_TRUE(bwd.ok()) << bwd.failure;
  EXPECT_EQ(bwd.operations, 60u);

  auto d2 = staff(94);
  auto key = d2->groups().begin()->first;
  auto un = audit::audit_untraceability(*d2, key, 50);
  EXPECT_TRUE(un.refresh_always());
  EXPECT_EQ(un.trials, 50u);
  EXPECT_GE(un.permutations.size(), 1u);
}

TEST(Audit, CleanRunHasNoViolations) {
  auto d = staff(95);
  Rng rng = Rng::seeded(96);
  audit::SecretCatalog catalog;
  auto stats = audit::fuzz_workload(*d, 150, rng, &catalog);
  EXPECT_EQ(stats.selects + stats.inserts + stats.deletes, 150u);
  auto log = d->log().entries();
  audit::catalog_from_log(log, catalog);
  EXPECT_GT(catalog.size(), 100u);
  EXPECT_TRUE(audit::isolation_audit(log, catalog).empty());
}

TEST(Audit, CatalogScanFindsUnalignedWindows) {
  audit::SecretCatalog c;
  Rng rng = Rng::seeded(97);
  auto secret = rng.bytes(32);
  c.forbid(Role::Sss, "nonce", secret);
  Bytes payload = rng.bytes(7);
  payload.insert(payload.end(), secret.begin() + 16, secret.end());
  payload.push_back(1);
  auto hit = c.scan(Role::Sss, payload);
  ASSERT_TRUE(hit);
  EXPECT_NE(hit->find("nonce"), std::string::npos);
  EXPECT_NE(hit->find("offset 7"), std::string::npos);
  EXPECT_FALSE(c.scan(Role::Rss, payload));
  EXPECT_FALSE(c.scan(Role::Sss, Bytes(secret.begin(), secret.begin() + 15)));
  // many entries: the table grows and keeps every window
  for (int i = 0; i < 5000; ++i) c.forbid(Role::Iws, "record", rng.bytes(16));
  EXPECT_EQ(c.size(), 5002u);
  EXPECT_TRUE(c.scan(Role::Sss, secret));
}

TEST(Audit, MisroutedSeedIsFlagged) {
  Rng rng = Rng::seeded(98);
  auto scheme = staff_scheme();
  auto keys = generate_keys(scheme.params, rng);
  auto setup = admin::setup(scheme, keys, staff_db(), rng);
  SssState sss(scheme.params, setup.store.edb);
  IwsState iws(scheme.params, keys.s2, setup.store.gdb, setup.store.ndb, Rng::seeded(99));
  SssService sss_svc(sss);
  UnblindedIws iws_svc(iws);
  RssService rss_svc;
  InProcEndpoint e1(sss_svc), e2(iws_svc), e3(rss_svc);
  MessageLog log;
  Orchestrator user(scheme, keys, Endpoints{&e1, &e2, &e3}, "user", Rng::seeded(100), &log);

  audit::SecretCatalog catalog;
  audit::catalog_from_store(setup.store, keys, catalog);
  user.run_select({QueryType::Select, 0, el("Bob")});
  auto entries = log.entries();
  audit::catalog_from_log(entries, catalog);
  auto v = audit::isolation_audit(entries, catalog);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v[0].role, Role::Sss);
  EXPECT_NE(v[0].detail.find("seed"), std::string::npos) << v[0].detail;
}

// A message type a role must never receive is flagged by type alone.
TEST(Audit, ForbiddenMessageTypeIsFlagged) {
  auto d = staff(101);
  d->user().run_select({QueryType::Select, 0, el("Bob")});
  auto log = d->log().entries();
  for (const auto& e : log) {
    if (e.msg.type == wire::MsgType::NonceReq) {
      LogEntry bad = e;
      bad.seq = log.back().seq + 1;
      bad.to = Role::Sss;
      log.push_back(bad);
      break;
    }
  }
  audit::SecretCatalog catalog;
  audit::catalog_from_log(log, catalog);
  auto v = audit::isolation_audit(log, catalog);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v.back().role, Role::Sss);
}

TEST(Audit, Reports) {
  auto d = staff(102);
  Rng rng = Rng::seeded(103);
  audit::PatternReport r;
  r.size = audit::audit_size_pattern(*d);
  r.forward = audit::audit_forward(*d, 5, rng);
  r.isolation = std::vector<audit::Violation>{};
  auto lines = audit::to_json_lines(r);
  std::size_t n = 0;
  std::istringstream in(lines);
  for (std::string line; std::getline(in, line);) {
    auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("audit"));
    ++n;
  }
  EXPECT_GE(n, 3u);
  auto text = audit::to_text(r);
  EXPECT_NE(text.find("isolation: 0 violations"), std::string::npos);
}
