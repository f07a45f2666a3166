// pmcdb: command-line front end over pmcdb::app.

#include <csignal>
#include <fstream>
#include <iostream>
#include <pthread.h>

#include <CLI11.hpp>

#include "pmcdb/app.hpp"

namespace {

using namespace pmcdb;

constexpr int kOk = 0;
constexpr int kAuditFailed = 1;
constexpr int kUsage = 2;
constexpr int kProtocol = 3;
constexpr int kAuth = 4;
constexpr int kIo = 5;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parameter: return kUsage;
    case ErrorKind::Protocol: return kProtocol;
    case ErrorKind::Auth:
    case ErrorKind::Revoked: return kAuth;
    case ErrorKind::Io: return kIo;
  }
  return kProtocol;
}

struct Connection {
  std::string dir;
  std::string key_file;
  std::string transport = "inproc";
  std::string sss = "127.0.0.1:7301";
  std::string iws = "127.0.0.1:7302";
  std::string rss = "127.0.0.1:7303";
  std::string user = "user";
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--data", dir, "Deployment directory")->required();
    cmd->add_option("--key-file", key_file, "Key file (default <data>/keys.json)");
    cmd->add_option("--transport", transport, "inproc or tcp")
        ->check(CLI::IsMember({"inproc", "tcp"}));
    cmd->add_option("--sss", sss, "SSS address host:port");
    cmd->add_option("--iws", iws, "IWS address host:port");
    cmd->add_option("--rss", rss, "RSS address host:port");
    cmd->add_option("--user", user, "User id presented to the services");
    cmd->add_option("--seed", seed, "Deterministic randomness (tests only)");
  }

  app::ConnectOptions options() const {
    app::ConnectOptions o;
    o.dir = dir;
    if (!key_file.empty()) o.key_file = key_file;
    o.transport = transport == "tcp" ? app::Transport::Tcp : app::Transport::InProc;
    o.sss = parse_address(sss);
    o.iws = parse_address(iws);
    o.rss = parse_address(rss);
    o.user = user;
    o.seed = seed;
    return o;
  }
};

std::optional<std::filesystem::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

void print_rows(const std::vector<std::string>& columns, const std::vector<Record>& rows) {
  for (std::size_t f = 0; f < columns.size(); ++f) std::cout << (f ? "\t" : "") << columns[f];
  std::cout << '\n';
  for (const auto& r : rows) {
    for (std::size_t f = 0; f < r.elements.size(); ++f) {
      std::cout << (f ? "\t" : "") << display_element(r.elements[f]);
    }
    std::cout << '\n';
  }
  std::cout << "(" << rows.size() << " rows)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Multi-cloud searchable encrypted database"};
  cli.require_subcommand(1);

  // init
  app::InitOptions init;
  std::string init_csv, init_out, init_keys, init_map;
  std::optional<std::uint64_t> init_mod, init_seed;
  auto* c_init = cli.add_subcommand("init", "Encrypt a CSV table into a new deployment");
  auto* csv_opt = c_init->add_option("--csv", init_csv, "Input CSV with a header row");
  auto* gen_opt = c_init->add_option("--generate", init.gen_rows,
                                     "Generate an integer-key table with this many rows");
  c_init->add_option("--distinct", init.gen_distinct, "Distinct keys in the generated table");
  csv_opt->excludes(gen_opt);
  c_init->add_option("--out", init_out, "Output directory")->required();
  c_init->add_option("--key-file", init_keys, "Where to write keys (default <out>/keys.json)");
  c_init->add_option("--group-bits", init.group_bits, "Bits of the keyed group id")
      ->check(CLI::Range(0, 64));
  auto* mod_opt = c_init->add_option("--modulo", init_mod, "Group integer keys by value mod m");
  auto* map_opt = c_init->add_option("--group-map", init_map, "JSON map of element -> group");
  mod_opt->excludes(map_opt);
  c_init->add_option("--lambda", init.lambda, "Minimum distinct elements per group");
  c_init->add_option("--elem-len", init.elem_len, "Element length in bytes (multiple of 16)");
  c_init->add_option("--seed", init_seed, "Deterministic randomness (tests only)");

  // serve
  std::string serve_role, serve_dir, serve_listen = "127.0.0.1:0", serve_keys;
  auto* c_serve = cli.add_subcommand("serve", "Host one role over TCP");
  c_serve->add_option("--role", serve_role, "sss, iws or rss")->required()
      ->check(CLI::IsMember({"sss", "iws", "rss"}));
  c_serve->add_option("--data", serve_dir, "Deployment directory");
  c_serve->add_option("--listen", serve_listen, "host:port to bind");
  c_serve->add_option("--key-file", serve_keys, "Key file; the IWS reads s2 from it");

  // select / insert / delete / revoke
  Connection sel_conn, ins_conn, del_conn, rev_conn;
  std::string sel_field, sel_value, del_field, del_value, rev_user;
  std::vector<std::string> ins_values;
  auto* c_select = cli.add_subcommand("select", "Print rows whose FIELD equals VALUE");
  sel_conn.add_to(c_select);
  c_select->add_option("field", sel_field, "Column name or 0-based index")->required();
  c_select->add_option("value", sel_value)->required();
  auto* c_insert = cli.add_subcommand("insert", "Insert one row");
  ins_conn.add_to(c_insert);
  c_insert->add_option("values", ins_values, "One value per column")->required();
  auto* c_delete = cli.add_subcommand("delete", "Delete rows whose FIELD equals VALUE");
  del_conn.add_to(c_delete);
  c_delete->add_option("field", del_field)->required();
  c_delete->add_option("value", del_value)->required();
  auto* c_revoke = cli.add_subcommand("revoke", "Block a user at the SSS and IWS");
  rev_conn.add_to(c_revoke);
  c_revoke->add_option("target", rev_user, "User id to revoke")->required();

  // audit / compact / stats
  std::string audit_dir, audit_keys, audit_kind = "all", audit_report;
  std::size_t audit_trials = 100;
  std::optional<std::uint64_t> audit_seed;
  bool audit_json = false;
  auto* c_audit = cli.add_subcommand("audit", "Run privacy audits on a copy of a deployment");
  c_audit->add_option("--data", audit_dir)->required();
  c_audit->add_option("--key-file", audit_keys);
  c_audit->add_option("--kind", audit_kind, "all, size, forward, backward, untrace, isolation");
  c_audit->add_option("--trials", audit_trials, "Trials or operations per audit");
  c_audit->add_option("--report", audit_report, "Write the JSON-lines report here");
  c_audit->add_flag("--json", audit_json, "Print JSON lines instead of text");
  c_audit->add_option("--seed", audit_seed);

  std::string compact_dir, compact_keys;
  std::optional<std::uint64_t> compact_seed;
  auto* c_compact = cli.add_subcommand("compact", "Drop padding that is no longer needed");
  c_compact->add_option("--data", compact_dir)->required();
  c_compact->add_option("--key-file", compact_keys);
  c_compact->add_option("--seed", compact_seed);

  std::string stats_dir, stats_keys;
  auto* c_stats = cli.add_subcommand("stats", "Record, dummy and group counts");
  c_stats->add_option("--data", stats_dir)->required();
  c_stats->add_option("--key-file", stats_keys);

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (c_init->parsed()) {
      if (!init_csv.empty()) init.csv = init_csv;
      init.out = init_out;
      init.key_file = opt_path(init_keys);
      init.modulo = init_mod;
      init.group_map = opt_path(init_map);
      init.seed = init_seed;
      auto r = app::cmd_init(init);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << "rows " << r.real_rows << ", records " << r.records << ", dummies "
                << r.sigma_max << ", groups " << r.groups << '\n';
      if (!r.key_file.empty()) std::cout << "keys written to " << r.key_file.string() << '\n';
    } else if (c_serve->parsed()) {
      const Role role = app::parse_role(serve_role);
      if (role != Role::Rss && serve_dir.empty()) {
        throw Error(ErrorKind::Parameter, "--data is required for the sss and iws roles");
      }
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);
      app::Server server(role, serve_dir, parse_address(serve_listen), opt_path(serve_keys));
      server.start();
      std::cout << serve_role << " listening on port " << server.port() << std::endl;
      int sig = 0;
      sigwait(&set, &sig);
      server.stop();
    } else if (c_select->parsed()) {
      app::Session s(sel_conn.options());
      print_rows(s.manifest().columns, s.select(sel_field, sel_value));
    } else if (c_insert->parsed()) {
      app::Session s(ins_conn.options());
      auto ids = s.insert(ins_values);
      std::cout << "inserted 1 row with " << ids.size() - 1 << " dummies\n";
    } else if (c_delete->parsed()) {
      app::Session s(del_conn.options());
      std::cout << "deleted " << s.remove(del_field, del_value) << " rows\n";
    } else if (c_revoke->parsed()) {
      app::Session s(rev_conn.options());
      s.revoke(rev_user);
      std::cout << "revoked " << rev_user << '\n';
    } else if (c_audit->parsed()) {
      app::AuditOptions o;
      o.dir = audit_dir;
      o.key_file = opt_path(audit_keys);
      o.kind = app::parse_audit_kind(audit_kind);
      o.trials = audit_trials;
      o.seed = audit_seed;
      auto report = app::cmd_audit(o);
      const auto lines = audit::to_json_lines(report);
      std::cout << (audit_json ? lines : audit::to_text(report));
      if (!audit_report.empty()) {
        std::ofstream out(audit_report);
        out << lines;
        if (!out) throw Error(ErrorKind::Io, "cannot write " + audit_report);
      }
      const bool failed = (report.size && !report.size->uniform()) ||
                          (report.forward && !report.forward->ok()) ||
                          (report.backward && !report.backward->ok()) ||
                          (report.isolation && !report.isolation->empty());
      return failed ? kAuditFailed : kOk;
    } else if (c_compact->parsed()) {
      auto r = app::cmd_compact(compact_dir, opt_path(compact_keys), compact_seed);
      std::cout << "nulled " << r.nulled_slots << " slots, removed " << r.removed_records
                << " records\n";
    } else if (c_stats->parsed()) {
      auto s = app::cmd_stats(stats_dir, opt_path(stats_keys));
      std::cout << "records " << s.records << "\nreal " << s.real << "\ndummies " << s.dummies
                << "\ngroups " << s.groups.size() << "\n";
      std::cout << "field\tgroup\telements\ttau\tindex\n";
      for (const auto& g : s.groups) {
        std::cout << g.key.field << '\t' << to_string(g.key.group) << '\t' << g.elements << '\t'
                  << g.tau << '\t' << g.il_size << '\n';
      }
    }
  } catch (const Error& e) {
    std::cerr << "error";
    if (e.origin() != Role::User) std::cerr << " (" << to_string(e.origin()) << ")";
    std::cerr << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kProtocol;
  }
  return kOk;
}
