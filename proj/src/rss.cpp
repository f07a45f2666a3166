#include "pmcdb/rss.hpp"

#include <algorithm>
#include <map>

#include "pmcdb/error.hpp"

namespace pmcdb::rss {

std::vector<std::pair<RecordId, EncryptedRecord>> shuffle(const ShuffleJob& job) {
  const std::size_t n = job.il.size();
  if (job.ercds.size() != n || job.il_prime.size() != n || job.nn.size() != n) {
    throw_protocol("shuffle job parts differ in size");
  }
  std::map<RecordId, const EncryptedRecord*> by_id;
  for (const auto& [id, r] : job.ercds) by_id.emplace(id, &r);
  auto a = job.il;
  auto b = job.il_prime;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<RecordId> c;
  c.reserve(by_id.size());
  for (const auto& [id, r] : by_id) c.push_back(id);
  if (a != b || a != c || std::adjacent_find(a.begin(), a.end()) != a.end()) {
    throw_protocol("shuffle job id sets do not coincide");
  }
  std::vector<std::pair<RecordId, EncryptedRecord>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    EncryptedRecord r = *by_id.at(job.il[i]);
    if (job.nn[i].size() != r.bytes.size()) throw_protocol("mask length differs from record");
    xor_into(r.bytes, job.nn[i]);
    out.emplace_back(job.il_prime[i], std::move(r));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  return out;
}

}  // namespace pmcdb::rss
