#include "pmcdb/app.hpp"

#include <algorithm>
#include <cstdlib>

#include "pmcdb/admin.hpp"

namespace pmcdb::app {

namespace {

Rng make_rng(const std::optional<std::uint64_t>& seed) {
  return seed ? Rng::seeded(*seed) : Rng();
}

bool env_keys_present() {
  return std::getenv("PMCDB_S1") != nullptr && std::getenv("PMCDB_S2") != nullptr;
}

fs::path key_path(const fs::path& dir, const std::optional<fs::path>& key_file) {
  return key_file ? *key_file : default_key_file(dir);
}

struct Loaded {
  store::Manifest manifest;
  Scheme scheme;
  SecretKeys keys;
  EncryptedStore store;
};

Loaded load_all(const fs::path& dir, const std::optional<fs::path>& key_file) {
  store::Layout layout{dir};
  Loaded l;
  l.manifest = store::load_manifest(layout.manifest());
  l.scheme = store::scheme_of(l.manifest);
  l.keys = store::load_keys(l.scheme.params, key_path(dir, key_file));
  l.store = store::load_store(layout, l.scheme.params);
  return l;
}

}  // namespace

fs::path default_key_file(const fs::path& dir) { return dir / "keys.json"; }

InitResult cmd_init(const InitOptions& opt) {
  if (opt.csv.has_value() == (opt.gen_rows > 0)) {
    throw_parameter("init needs exactly one of a CSV file or a generated table");
  }
  Rng rng = make_rng(opt.seed);
  SchemeParams params;
  params.elem_len = opt.elem_len;
  params.lambda = opt.lambda;

  store::Ingested input;
  if (opt.csv) {
    auto header = store::parse_csv([&] {
      auto data = store::read_file(*opt.csv);
      return std::string(data.begin(), data.end());
    }()).header;
    params.field_count = header.size();
    params.validate();
    input = store::ingest_csv(*opt.csv, params);
  } else {
    params.field_count = 1;
    params.validate();
    const std::uint64_t distinct = opt.gen_distinct > 0 ? opt.gen_distinct : opt.gen_rows;
    const std::size_t width = std::min<std::size_t>(params.elem_len, 10);
    input.db = store::integer_table(opt.gen_rows, distinct, width, params, rng);
    input.columns = {"key"};
  }

  std::shared_ptr<const GroupEncoder> encoder;
  if (opt.group_map) {
    encoder = store::load_group_map(*opt.group_map, input.columns, params);
  } else if (opt.modulo) {
    encoder = std::make_shared<ModuloGroupEncoder>(*opt.modulo);
  } else {
    encoder = std::make_shared<KeyedGroupEncoder>(opt.group_bits);
  }
  Scheme scheme{params, encoder};

  InitResult result;
  SecretKeys keys;
  if (env_keys_present()) {
    keys = store::load_keys(params, {});
  } else {
    keys = generate_keys(params, rng);
  }
  auto setup = admin::setup(scheme, keys, input.db, rng);

  std::error_code ec;
  fs::create_directories(opt.out, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + opt.out.string() + ": " + ec.message());
  store::Layout layout{opt.out};
  result.manifest = store::Manifest{params, store::encoder_spec(*encoder), input.columns};
  store::save_store(layout, params, setup.store);
  store::save_manifest(layout.manifest(), result.manifest);
  if (!env_keys_present()) {
    result.key_file = key_path(opt.out, opt.key_file);
    store::save_key_file(result.key_file, keys);
  }
  result.real_rows = input.db.rows.size();
  result.records = setup.store.edb.size();
  result.sigma_max = setup.sigma_max;
  result.groups = setup.store.gdb.size();
  result.warnings = std::move(setup.warnings);
  return result;
}

// ---- session ---------------------------------------------------------------

Session::Session(const ConnectOptions& opt) : opt_(opt) {
  store::Layout layout{opt.dir};
  manifest_ = store::load_manifest(layout.manifest());
  scheme_ = store::scheme_of(manifest_);
  auto keys = store::load_keys(scheme_.params, key_path(opt.dir, opt.key_file));
  Rng rng = make_rng(opt.seed);
  if (opt.transport == Transport::InProc) {
    auto s = store::load_store(layout, scheme_.params);
    // Foreign keys would otherwise just match nothing; any metadata
    // ciphertext fails to open under them.
    if (!s.gdb.empty()) open_meta(s.gdb.begin()->second.meta_ct, keys.s1);
    deployment_ = std::make_unique<Deployment>(scheme_, keys, std::move(s), Rng(rng.key32()));
    if (opt.user == "user") {
      user_ = &deployment_->user();
    } else {
      owned_user_ = deployment_->connect(opt.user);
      user_ = owned_user_.get();
    }
  } else {
    for (const auto* a : {&opt.sss, &opt.iws, &opt.rss}) {
      remotes_.push_back(std::make_unique<TcpEndpoint>(*a));
    }
    owned_user_ = std::make_unique<Orchestrator>(
        scheme_, keys, Endpoints{remotes_[0].get(), remotes_[1].get(), remotes_[2].get()},
        opt.user, std::move(rng));
    user_ = owned_user_.get();
  }
}

Session::~Session() = default;

std::size_t Session::column(const std::string& name_or_index) const {
  const auto& cols = manifest_.columns;
  auto it = std::find(cols.begin(), cols.end(), name_or_index);
  if (it != cols.end()) return static_cast<std::size_t>(it - cols.begin());
  if (!name_or_index.empty() &&
      name_or_index.find_first_not_of("0123456789") == std::string::npos &&
      name_or_index.size() < 6) {
    const auto f = std::stoul(name_or_index);
    if (f < cols.size()) return f;
  }
  throw_parameter("unknown column '" + name_or_index + "'");
}

void Session::persist() {
  if (!deployment_) return;
  store::save_store(store::Layout{opt_.dir}, scheme_.params, deployment_->snapshot());
}

std::vector<Record> Session::select(const std::string& column, const std::string& value) {
  auto rows = user_->run_select(
      Query{QueryType::Select, this->column(column), pad_element(value, scheme_.params)});
  persist();
  std::sort(rows.begin(), rows.end());
  return rows;
}

std::vector<RecordId> Session::insert(const std::vector<std::string>& cells) {
  auto t = user_->insert(make_record(cells, scheme_.params));
  persist();
  return t.ids;
}

std::size_t Session::remove(const std::string& column, const std::string& value) {
  auto n = user_->run_delete(
      Query{QueryType::Delete, this->column(column), pad_element(value, scheme_.params)});
  persist();
  return n;
}

void Session::revoke(const std::string& user) { user_->revoke(user); }

// ---- admin commands --------------------------------------------------------

Stats cmd_stats(const fs::path& dir, const std::optional<fs::path>& key_file) {
  auto l = load_all(dir, key_file);
  Stats s;
  s.records = l.store.edb.size();
  for (const auto& r : admin::decrypt_store(l.scheme.params, l.keys, l.store.edb, l.store.ndb)) {
    (r.real ? s.real : s.dummies) += 1;
  }
  for (const auto& [key, entry] : l.store.gdb) {
    auto meta = open_meta(entry.meta_ct, l.keys.s1);
    s.groups.push_back({key, meta.elements.size(), meta.tau, entry.il.size()});
  }
  return s;
}

admin::CompactReport cmd_compact(const fs::path& dir, const std::optional<fs::path>& key_file,
                                 std::optional<std::uint64_t> seed) {
  auto l = load_all(dir, key_file);
  Rng rng = make_rng(seed);
  auto report = admin::compact(l.scheme, l.keys, l.store, rng);
  store::save_store(store::Layout{dir}, l.scheme.params, l.store);
  return report;
}

AuditKind parse_audit_kind(const std::string& text) {
  if (text == "all") return AuditKind::All;
  if (text == "size") return AuditKind::Size;
  if (text == "forward") return AuditKind::Forward;
  if (text == "backward") return AuditKind::Backward;
  if (text == "untrace" || text == "untraceability") return AuditKind::Untrace;
  if (text == "isolation") return AuditKind::Isolation;
  throw_parameter("unknown audit kind '" + text + "'");
}

audit::PatternReport cmd_audit(const AuditOptions& opt) {
  auto l = load_all(opt.dir, opt.key_file);
  Rng rng = make_rng(opt.seed);
  Deployment d(l.scheme, l.keys, std::move(l.store), Rng(rng.key32()));
  audit::PatternReport report;
  const bool all = opt.kind == AuditKind::All;

  if (all || opt.kind == AuditKind::Size) report.size = audit::audit_size_pattern(d);
  if (all || opt.kind == AuditKind::Untrace) {
    // the largest group shows the most movement
    std::optional<GroupKey> pick;
    std::size_t best = 0;
    for (const auto& [key, meta] : d.groups()) {
      const auto n = d.iws().gdb().at(key).il.size();
      if (!meta.elements.empty() && (!pick || n > best)) {
        pick = key;
        best = n;
      }
    }
    if (pick) report.untrace = audit::audit_untraceability(d, *pick, opt.trials);
  }
  if (all || opt.kind == AuditKind::Forward) report.forward = audit::audit_forward(d, opt.trials, rng);
  if (all || opt.kind == AuditKind::Backward) {
    report.backward = audit::audit_backward(d, opt.trials, rng);
  }
  if (all || opt.kind == AuditKind::Isolation) {
    audit::SecretCatalog catalog;
    audit::fuzz_workload(d, opt.trials, rng, &catalog);
    // earlier audits ran on the same bus; check everything that crossed it
    auto log = d.log().entries();
    audit::catalog_from_log(log, catalog);
    report.isolation = audit::isolation_audit(log, catalog);
  }
  return report;
}

// ---- serve -----------------------------------------------------------------

Role parse_role(const std::string& text) {
  if (text == "sss") return Role::Sss;
  if (text == "iws") return Role::Iws;
  if (text == "rss") return Role::Rss;
  throw_parameter("unknown role '" + text + "' (expected sss, iws or rss)");
}

struct Server::Impl {
  Role role;
  store::Layout layout;
  SchemeParams params;
  std::unique_ptr<SssState> sss;
  std::unique_ptr<IwsState> iws;
  std::unique_ptr<Service> service;
  std::unique_ptr<TcpServer> server;
};

Server::Server(Role role, const fs::path& dir, const Address& addr,
               const std::optional<fs::path>& key_file)
    : impl_(std::make_unique<Impl>()) {
  auto& m = *impl_;
  m.role = role;
  m.layout = store::Layout{dir};
  if (role == Role::Rss) {
    m.service = std::make_unique<RssService>();
  } else {
    m.params = store::load_manifest(m.layout.manifest()).params;
    const auto p = m.params;
    const auto layout = m.layout;
    if (role == Role::Sss) {
      m.sss = std::make_unique<SssState>(p, store::load_edb(layout.edb(), p));
      auto svc = std::make_unique<SssService>(*m.sss);
      svc->on_change = [p, layout](const SssState& s) { store::save_edb(layout.edb(), p, s.edb()); };
      m.service = std::move(svc);
    } else if (role == Role::Iws) {
      // the IWS holds s2 only
      auto s2 = store::load_keys(p, key_path(dir, key_file)).s2;
      m.iws = std::make_unique<IwsState>(p, std::move(s2), store::load_gdb(layout.gdb(), p),
                                         store::load_ndb(layout.ndb(), p));
      auto svc = std::make_unique<IwsService>(*m.iws);
      svc->on_change = [p, layout](const IwsState& s) {
        store::save_ndb(layout.ndb(), p, s.ndb());
        store::save_gdb(layout.gdb(), p, s.gdb());
      };
      m.service = std::move(svc);
    } else {
      throw_parameter("serve hosts sss, iws or rss");
    }
  }
  m.server = std::make_unique<TcpServer>(*m.service, addr);
}

Server::~Server() { stop(); }
std::uint16_t Server::port() const { return impl_->server->port(); }
void Server::run() { impl_->server->run(); }
void Server::start() { impl_->server->start(); }
void Server::stop() {
  if (impl_ && impl_->server) impl_->server->stop();
}

}  // namespace pmcdb::app
