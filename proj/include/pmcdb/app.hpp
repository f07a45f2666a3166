#pragma once

// Operations behind the command-line tool. The tool only parses flags and
// prints; everything it does is reachable from here.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pmcdb/auditor.hpp"
#include "pmcdb/deployment.hpp"
#include "pmcdb/store.hpp"
#include "pmcdb/tcp.hpp"

namespace pmcdb::app {

namespace fs = std::filesystem;

struct InitOptions {
  std::optional<fs::path> csv;  // or a generated integer table
  std::size_t gen_rows = 0;
  std::uint64_t gen_distinct = 0;
  fs::path out;
  std::optional<fs::path> key_file;  // default: <out>/keys.json
  std::size_t group_bits = 2;
  std::optional<std::uint64_t> modulo;
  std::optional<fs::path> group_map;
  std::size_t lambda = 1;
  std::size_t elem_len = 16;
  std::optional<std::uint64_t> seed;
};

struct InitResult {
  store::Manifest manifest;
  std::size_t real_rows = 0;
  std::size_t records = 0;
  std::uint64_t sigma_max = 0;
  std::size_t groups = 0;
  std::vector<std::string> warnings;
  fs::path key_file;
};

InitResult cmd_init(const InitOptions& opt);

enum class Transport { InProc, Tcp };

struct ConnectOptions {
  fs::path dir;
  std::optional<fs::path> key_file;  // default: <dir>/keys.json
  Transport transport = Transport::InProc;
  Address sss, iws, rss;
  std::string user = "user";
  std::optional<std::uint64_t> seed;
};

fs::path default_key_file(const fs::path& dir);

// A user session against a deployment directory (in-process) or three
// running services (tcp). In-process sessions write the stores back after
// every operation, since selects reshuffle them.
class Session {
 public:
  explicit Session(const ConnectOptions& opt);
  ~Session();

  const store::Manifest& manifest() const { return manifest_; }
  const Scheme& scheme() const { return scheme_; }
  std::size_t column(const std::string& name_or_index) const;

  std::vector<Record> select(const std::string& column, const std::string& value);
  std::vector<RecordId> insert(const std::vector<std::string>& cells);
  std::size_t remove(const std::string& column, const std::string& value);
  void revoke(const std::string& user);

  Orchestrator& orchestrator() { return *user_; }
  // Only for in-process sessions.
  Deployment* deployment() { return deployment_.get(); }

 private:
  void persist();

  ConnectOptions opt_;
  store::Manifest manifest_;
  Scheme scheme_;
  std::unique_ptr<Deployment> deployment_;
  std::vector<std::unique_ptr<TcpEndpoint>> remotes_;
  std::unique_ptr<Orchestrator> owned_user_;
  Orchestrator* user_ = nullptr;
};

struct GroupStats {
  GroupKey key;
  std::size_t elements = 0;
  std::uint64_t tau = 0;
  std::size_t il_size = 0;
};

struct Stats {
  std::size_t records = 0;  // N
  std::size_t real = 0;
  std::size_t dummies = 0;
  std::vector<GroupStats> groups;
};

Stats cmd_stats(const fs::path& dir, const std::optional<fs::path>& key_file);
admin::CompactReport cmd_compact(const fs::path& dir, const std::optional<fs::path>& key_file,
                                 std::optional<std::uint64_t> seed);

enum class AuditKind { All, Size, Forward, Backward, Untrace, Isolation };
AuditKind parse_audit_kind(const std::string& text);

struct AuditOptions {
  fs::path dir;
  std::optional<fs::path> key_file;
  AuditKind kind = AuditKind::All;
  std::size_t trials = 100;
  std::optional<std::uint64_t> seed;
};

// Runs on an in-memory copy; the stores on disk are left untouched.
audit::PatternReport cmd_audit(const AuditOptions& opt);

// Hosts one role over TCP until stop() is called from another thread or the
// process is signalled. State changes are written back to dir.
class Server {
 public:
  Server(Role role, const fs::path& dir, const Address& addr,
         const std::optional<fs::path>& key_file);
  ~Server();
  std::uint16_t port() const;
  void run();
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Role parse_role(const std::string& text);

}  // namespace pmcdb::app
