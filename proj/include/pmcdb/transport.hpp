#pragma once

// Role services and the channels that carry frames to them.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pmcdb/error.hpp"
#include "pmcdb/iws.hpp"
#include "pmcdb/rss.hpp"
#include "pmcdb/sss.hpp"
#include "pmcdb/wire.hpp"

namespace pmcdb {

// A role's message handler. handle() never throws: failures come back as
// Error frames tagged with the role.
class Service {
 public:
  virtual ~Service() = default;
  virtual Role role() const = 0;
  wire::Message handle(const wire::Message& msg);

 protected:
  virtual wire::Message dispatch(const wire::Message& msg) = 0;

 private:
  std::mutex inbox_;
};

class SssService : public Service {
 public:
  explicit SssService(SssState& state) : state_(state) {}
  Role role() const override { return Role::Sss; }
  // Called after every state-changing message; used by `serve` to persist.
  std::function<void(const SssState&)> on_change;

 protected:
  wire::Message dispatch(const wire::Message& msg) override;

 private:
  SssState& state_;
  std::map<std::uint64_t, EncryptedQuery> pending_;
};

class IwsService : public Service {
 public:
  explicit IwsService(IwsState& state) : state_(state) {}
  Role role() const override { return Role::Iws; }
  std::function<void(const IwsState&)> on_change;

 protected:
  wire::Message dispatch(const wire::Message& msg) override;

 private:
  IwsState& state_;
};

// Holds a shuffle job until both its ShuffleReq and ShuffleData have arrived.
class RssService : public Service {
 public:
  Role role() const override { return Role::Rss; }

 protected:
  wire::Message dispatch(const wire::Message& msg) override;

 private:
  struct Partial {
    std::optional<ShufflePlan> plan;
    std::optional<std::vector<std::pair<RecordId, EncryptedRecord>>> records;
  };
  wire::Message complete(std::uint64_t job);
  std::map<std::uint64_t, Partial> jobs_;
};

// Request/reply channel to one role.
class Endpoint {
 public:
  virtual ~Endpoint() = default;
  virtual wire::Message call(const wire::Message& request) = 0;
};

// Same-process channel. Frames are still encoded and decoded in full.
class InProcEndpoint : public Endpoint {
 public:
  explicit InProcEndpoint(Service& service) : service_(service) {}
  wire::Message call(const wire::Message& request) override;

 private:
  Service& service_;
};

struct LogEntry {
  std::uint64_t seq = 0;
  Role from = Role::User;
  Role to = Role::User;
  wire::Message msg;
};

// Every frame that crossed the bus, in order.
class MessageLog {
 public:
  void record(Role from, Role to, const wire::Message& msg);
  std::vector<LogEntry> entries() const;
  std::vector<LogEntry> entries_since(std::size_t seq) const;
  std::size_t size() const;
  void clear();

 private:
  mutable std::mutex mu_;
  std::vector<LogEntry> entries_;
};

}  // namespace pmcdb
