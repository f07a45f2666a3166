#pragma once

// Fixtures, generators and plaintext oracles shared by the test binaries.

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "pmcdb/deployment.hpp"
#include "pmcdb/store.hpp"

namespace pmcdb::fx {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(PMCDB_FIXTURES) / name;
}

inline SchemeParams staff_params() {
  SchemeParams p;
  p.field_count = 2;
  return p;
}

inline Scheme staff_scheme() {
  const auto p = staff_params();
  return Scheme{p, store::load_group_map(fixture("staff_groups.json"), {"Name", "Age"}, p)};
}

inline PlainDatabase staff_db() { return store::ingest_csv(fixture("staff.csv"), staff_params()).db; }

inline Element el(const std::string& s, const SchemeParams& p = staff_params()) {
  return pad_element(s, p);
}

inline Record row(const std::vector<std::string>& cells, const SchemeParams& p = staff_params()) {
  return make_record(cells, p);
}

// Random table: `fields` columns, values "v<k>" with k below `alphabet[f]`.
inline PlainDatabase random_db(Rng& rng, std::size_t rows, std::size_t fields,
                               const std::vector<std::size_t>& alphabet,
                               const SchemeParams& p) {
  PlainDatabase db;
  db.field_count = fields;
  for (std::size_t i = 0; i < rows; ++i) {
    Record r;
    for (std::size_t f = 0; f < fields; ++f) {
      r.elements.push_back(pad_element("v" + std::to_string(rng.uniform(alphabet[f])), p));
    }
    db.rows.push_back(std::move(r));
  }
  return db;
}

inline std::vector<Record> real_rows(const std::vector<Record>& rows) {
  std::vector<Record> out;
  for (const auto& r : rows) {
    if (r.real) out.push_back(r);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Plaintext scan, sorted.
inline std::vector<Record> shadow_select(const std::vector<Record>& rows, std::size_t field,
                                         const Element& e) {
  std::vector<Record> out;
  for (const auto& r : rows) {
    if (r.real && r.elements[field] == e) out.push_back(r);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<Record> sorted(std::vector<Record> rows) {
  for (auto& r : rows) r.real = true;
  std::sort(rows.begin(), rows.end());
  return rows;
}

// Σ_f = Σ over groups of Σ over members (τ - O(e)), τ the largest count in
// the group. Computed straight from the rows and the encoder.
inline std::uint64_t brute_sigma_max(const Scheme& scheme, const SecretKeys& keys,
                                     const PlainDatabase& db) {
  std::uint64_t best = 0;
  for (std::size_t f = 0; f < db.field_count; ++f) {
    std::map<Element, std::uint64_t> count;
    for (const auto& r : db.rows) ++count[r.elements[f]];
    std::map<GroupId, std::vector<std::uint64_t>> groups;
    for (const auto& [e, n] : count) groups[scheme.group_of(keys.s1, f, e)].push_back(n);
    std::uint64_t sigma = 0;
    for (const auto& [g, counts] : groups) {
      const auto tau = *std::max_element(counts.begin(), counts.end());
      for (auto n : counts) sigma += tau - n;
    }
    best = std::max(best, sigma);
  }
  return best;
}

// Every group's members occur equally often over all rows (real and dummy).
inline bool occurrences_equal(const Scheme& scheme, const SecretKeys& keys,
                              const std::vector<Record>& rows, std::size_t fields) {
  for (std::size_t f = 0; f < fields; ++f) {
    std::map<Element, std::uint64_t> count;
    for (const auto& r : rows) {
      if (!is_null(r.elements[f])) ++count[r.elements[f]];
    }
    std::map<GroupId, std::set<std::uint64_t>> seen;
    for (const auto& [e, n] : count) seen[scheme.group_of(keys.s1, f, e)].insert(n);
    for (const auto& [g, values] : seen) {
      if (values.size() != 1) return false;
    }
  }
  return true;
}

}  // namespace pmcdb::fx
