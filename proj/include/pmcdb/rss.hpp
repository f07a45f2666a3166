#pragma once

// Re-randomise and Shuffle Service: stateless.

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "pmcdb/model.hpp"

namespace pmcdb {

// The record stored at il[i] moves to il_prime[i] and is XORed with nn[i].
// ercds arrives from the SSS keyed by id, in any order.
struct ShuffleJob {
  std::vector<std::pair<RecordId, EncryptedRecord>> ercds;
  std::vector<RecordId> il;
  std::vector<RecordId> il_prime;
  std::vector<Bytes> nn;
};

namespace rss {

// Output sorted by destination id so the SSS cannot link inputs to outputs.
std::vector<std::pair<RecordId, EncryptedRecord>> shuffle(const ShuffleJob& job);

}  // namespace rss

}  // namespace pmcdb
