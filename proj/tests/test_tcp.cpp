#include <gtest/gtest.h>

#include "pmcdb/admin.hpp"
#include "pmcdb/error.hpp"
#include "pmcdb/tcp.hpp"
#include "support.hpp"

using namespace pmcdb;
using namespace pmcdb::fx;

namespace {

// Three role servers on ephemeral ports over a Staff store.
struct Cluster {
  Scheme scheme = staff_scheme();
  SecretKeys keys;
  std::unique_ptr<SssState> sss;
  std::unique_ptr<IwsState> iws;
  std::unique_ptr<SssService> sss_svc;
  std::unique_ptr<IwsService> iws_svc;
  RssService rss_svc;
  std::unique_ptr<TcpServer> s1, s2, s3;

  explicit Cluster(std::uint64_t seed) {
    Rng rng = Rng::seeded(seed);
    keys = generate_keys(scheme.params, rng);
    auto setup = admin::setup(scheme, keys, staff_db(), rng);
    sss = std::make_unique<SssState>(scheme.params, setup.store.edb);
    iws = std::make_unique<IwsState>(scheme.params, keys.s2, setup.store.gdb, setup.store.ndb,
                                     Rng::seeded(seed + 1));
    sss_svc = std::make_unique<SssService>(*sss);
    iws_svc = std::make_unique<IwsService>(*iws);
    s1 = std::make_unique<TcpServer>(*sss_svc, Address{"127.0.0.1", 0});
    s2 = std::make_unique<TcpServer>(*iws_svc, Address{"127.0.0.1", 0});
    s3 = std::make_unique<TcpServer>(rss_svc, Address{"127.0.0.1", 0});
    s1->start();
    s2->start();
    s3->start();
  }
  ~Cluster() {
    s1->stop();
    s2->stop();
    s3->stop();
  }
};

struct Client {
  TcpEndpoint sss, iws, rss;
  Orchestrator user;
  Client(Cluster& c, const std::string& name, std::uint64_t seed)
      : sss(Address{"127.0.0.1", c.s1->port()}),
        iws(Address{"127.0.0.1", c.s2->port()}),
        rss(Address{"127.0.0.1", c.s3->port()}),
        user(c.scheme, c.keys, Endpoints{&sss, &iws, &rss}, name, Rng::seeded(seed)) {}
};

}  // namespace

TEST(Tcp, SelectInsertDelete) {
  Cluster c(121);
  Client a(c, "alice", 122);
  auto rows = a.user.run_select({QueryType::Select, 0, el("Bob")});
  EXPECT_EQ(sorted(rows), sorted({row({"Bob", "27"}), row({"Bob", "33"})}));
  a.user.run_insert(row({"Bob", "40"}));
  rows = a.user.run_select({QueryType::Select, 0, el("Bob")});
  EXPECT_EQ(rows.size(), 3u);
  EXPECT_EQ(a.user.run_delete({QueryType::Delete, 1, el("27")}), 2u);
  rows = a.user.run_select({QueryType::Select, 0, el("Bob")});
  EXPECT_EQ(sorted(rows), sorted({row({"Bob", "33"}), row({"Bob", "40"})}));

  // a second connection sees the same state
  Client b(c, "bob", 123);
  EXPECT_EQ(b.user.run_select({QueryType::Select, 0, el("Alice")}).size(), 0u);
  EXPECT_EQ(b.user.run_select({QueryType::Select, 0, el("Anna")}).size(), 1u);
}

TEST(Tcp, RevokedUserIsRefusedBySss) {
  Cluster c(124);
  Client admin(c, "admin", 125);
  Client eve(c, "eve", 126);
  EXPECT_EQ(eve.user.run_select({QueryType::Select, 0, el("Anna")}).size(), 1u);
  admin.user.revoke("eve");
  try {
    eve.user.run_select({QueryType::Select, 0, el("Anna")});
    FAIL() << "revoked user was served";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Revoked);
    EXPECT_EQ(e.origin(), Role::Sss);
  }
  EXPECT_EQ(admin.user.run_select({QueryType::Select, 0, el("Anna")}).size(), 1u);
}

TEST(Tcp, ClosedPortIsIoError) {
  std::uint16_t port;
  {
    RssService svc;
    TcpServer s(svc, Address{"127.0.0.1", 0});
    port = s.port();
  }
  TcpEndpoint ep(Address{"127.0.0.1", port});
  try {
    ep.call(wire::encode(wire::RevokeMsg{"x"}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}

TEST(Tcp, Addresses) {
  auto a = parse_address("10.0.0.2:7001");
  EXPECT_EQ(a.host, "10.0.0.2");
  EXPECT_EQ(a.port, 7001);
  auto b = parse_address("7002");
  EXPECT_EQ(b.host, "127.0.0.1");
  EXPECT_EQ(b.port, 7002);
  EXPECT_EQ(to_string(a), "10.0.0.2:7001");
  EXPECT_THROW(parse_address("host:notaport"), Error);
  EXPECT_THROW(parse_address("host:70000"), Error);
}
