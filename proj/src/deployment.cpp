#include "pmcdb/deployment.hpp"

namespace pmcdb {

Deployment::Deployment(Scheme scheme, SecretKeys keys, EncryptedStore store, Rng rng)
    : scheme_(std::move(scheme)),
      keys_(std::move(keys)),
      rng_(std::move(rng)),
      sss_(scheme_.params, std::move(store.edb)),
      iws_(scheme_.params, keys_.s2, std::move(store.gdb), std::move(store.ndb), Rng(rng_.key32())),
      sss_svc_(sss_),
      iws_svc_(iws_),
      sss_ep_(sss_svc_),
      iws_ep_(iws_svc_),
      rss_ep_(rss_svc_),
      locks_(std::make_shared<LockManager>()) {
  if (sss_.edb().size() != iws_.ndb().size()) throw_protocol("EDB and NDB are not aligned");
  default_user_ = connect("user");
}

std::unique_ptr<Deployment> Deployment::build(const Scheme& scheme, const SecretKeys& keys,
                                              const PlainDatabase& db, Rng& rng,
                                              admin::SetupOutput* info) {
  auto out = admin::setup(scheme, keys, db, rng);
  auto d = std::make_unique<Deployment>(scheme, keys, std::move(out.store), Rng(rng.key32()));
  if (info != nullptr) {
    info->sigma_max = out.sigma_max;
    info->warnings = std::move(out.warnings);
  }
  return d;
}

std::unique_ptr<Orchestrator> Deployment::connect(const std::string& user) {
  return std::make_unique<Orchestrator>(scheme_, keys_, endpoints(), user, Rng(rng_.key32()),
                                        &log_, locks_);
}

EncryptedStore Deployment::snapshot() {
  auto guard = locks_->lock_exclusive();
  return EncryptedStore{sss_.edb(), iws_.ndb(), iws_.gdb()};
}

void Deployment::replace(EncryptedStore store) {
  auto guard = locks_->lock_exclusive();
  if (store.edb.size() != store.ndb.size()) throw_protocol("EDB and NDB are not aligned");
  iws_.replace(std::move(store.gdb), std::move(store.ndb));
  sss_.replace(std::move(store.edb));
}

std::vector<Record> Deployment::decrypt_all() {
  auto s = snapshot();
  return admin::decrypt_store(scheme_.params, keys_, s.edb, s.ndb);
}

admin::GroupTable Deployment::groups() {
  auto guard = locks_->lock_exclusive();
  return admin::open_directory(iws_.gdb(), keys_);
}

admin::CompactReport Deployment::compact() {
  auto guard = locks_->lock_exclusive();
  EncryptedStore s{sss_.edb(), iws_.ndb(), iws_.gdb()};
  auto report = admin::compact(scheme_, keys_, s, rng_);
  iws_.replace(std::move(s.gdb), std::move(s.ndb));
  sss_.replace(std::move(s.edb));
  return report;
}

}  // namespace pmcdb
