#pragma once

// All three roles in one process, wired through in-process endpoints, plus
// the admin's view (keys, decryption oracle, compaction).

#include <memory>
#include <string>
#include <vector>

#include "pmcdb/admin.hpp"
#include "pmcdb/orchestrator.hpp"

namespace pmcdb {

class Deployment {
 public:
  Deployment(Scheme scheme, SecretKeys keys, EncryptedStore store, Rng rng);
  Deployment(const Deployment&) = delete;
  Deployment& operator=(const Deployment&) = delete;

  // Runs setup over db and deploys the result.
  static std::unique_ptr<Deployment> build(const Scheme& scheme, const SecretKeys& keys,
                                           const PlainDatabase& db, Rng& rng,
                                           admin::SetupOutput* info = nullptr);

  // The default user, "user".
  Orchestrator& user() { return *default_user_; }
  std::unique_ptr<Orchestrator> connect(const std::string& user);

  SssState& sss() { return sss_; }
  IwsState& iws() { return iws_; }
  Endpoints endpoints() { return {&sss_ep_, &iws_ep_, &rss_ep_}; }
  MessageLog& log() { return log_; }
  const Scheme& scheme() const { return scheme_; }
  const SecretKeys& keys() const { return keys_; }

  // Copies or replaces all stores while no operation is in flight.
  EncryptedStore snapshot();
  void replace(EncryptedStore store);

  // Admin oracle: every row decrypted, index = record id.
  std::vector<Record> decrypt_all();
  admin::GroupTable groups();
  admin::CompactReport compact();
  void revoke(const std::string& user) { default_user_->revoke(user); }

 private:
  Scheme scheme_;
  SecretKeys keys_;
  Rng rng_;
  SssState sss_;
  IwsState iws_;
  SssService sss_svc_;
  IwsService iws_svc_;
  RssService rss_svc_;
  InProcEndpoint sss_ep_;
  InProcEndpoint iws_ep_;
  InProcEndpoint rss_ep_;
  MessageLog log_;
  std::shared_ptr<LockManager> locks_;
  std::unique_ptr<Orchestrator> default_user_;
};

}  // namespace pmcdb
