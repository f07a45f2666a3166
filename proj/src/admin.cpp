#include "pmcdb/admin.hpp"

#include <algorithm>
#include <numeric>

#include "pmcdb/client.hpp"
#include "pmcdb/error.hpp"

namespace pmcdb::admin {

GroupGenResult group_gen(const Scheme& scheme, const SecretKeys& keys, const PlainDatabase& db) {
  const auto& p = scheme.params;
  if (db.field_count != p.field_count) throw_parameter("database field count mismatch");
  GroupGenResult out;
  for (std::size_t f = 0; f < p.field_count; ++f) {
    auto counts = occurrence_census(db, f);
    for (const auto& e : universe(db, f)) {
      GroupKey key{f, scheme.group_of(keys.s1, f, e)};
      auto& meta = out.groups[key];
      meta.elements.insert(e);
      auto it = counts.find(e);
      meta.tau = std::max<std::uint64_t>(meta.tau, it == counts.end() ? 0 : it->second);
    }
  }
  for (const auto& [key, meta] : out.groups) {
    if (meta.elements.size() < p.lambda) {
      out.warnings.push_back("group " + to_string(key) + " holds " +
                             std::to_string(meta.elements.size()) +
                             " distinct elements, fewer than lambda=" + std::to_string(p.lambda));
    }
  }
  return out;
}

DummyGenResult dummy_gen(const Scheme& scheme, const PlainDatabase& db, const GroupTable& groups,
                         Rng& rng) {
  const auto& p = scheme.params;
  DummyGenResult out;
  out.sigma.assign(p.field_count, 0);

  // Per field: the element to place in dummy slot i, before NULL filling.
  std::vector<std::vector<Element>> slots(p.field_count);
  for (std::size_t f = 0; f < p.field_count; ++f) {
    auto counts = occurrence_census(db, f);
    for (auto it = groups.lower_bound(GroupKey{f, GroupId{}});
         it != groups.end() && it->first.field == f; ++it) {
      const auto& meta = it->second;
      std::vector<std::pair<Element, std::uint64_t>> need;
      for (const auto& e : meta.elements) {
        auto c = counts.find(e);
        const std::uint64_t o = c == counts.end() ? 0 : c->second;
        if (o > meta.tau) throw_parameter("group threshold below an element occurrence");
        if (meta.tau > o) need.emplace_back(e, meta.tau - o);
      }
      // round-robin over the group's elements in bytewise order
      bool any = !need.empty();
      while (any) {
        any = false;
        for (auto& [e, n] : need) {
          if (n == 0) continue;
          slots[f].push_back(e);
          --n;
          any = true;
        }
      }
    }
    out.sigma[f] = slots[f].size();
  }
  out.sigma_max =
      out.sigma.empty() ? 0 : *std::max_element(out.sigma.begin(), out.sigma.end());

  out.padded.field_count = p.field_count;
  out.padded.predefined = db.predefined;
  std::vector<Record> rows;
  rows.reserve(db.rows.size() + out.sigma_max);
  for (const auto& r : db.rows) {
    Record real = r;
    real.real = true;
    rows.push_back(std::move(real));
  }
  for (std::uint64_t i = 0; i < out.sigma_max; ++i) {
    Record d;
    d.real = false;
    for (std::size_t f = 0; f < p.field_count; ++f) {
      d.elements.push_back(i < slots[f].size() ? slots[f][i] : null_element(p));
    }
    rows.push_back(std::move(d));
  }

  if (!rows.empty()) {
    std::vector<std::uint64_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    order = prp_shuffle(rng.key32(), std::move(order));
    out.padded.rows.reserve(rows.size());
    for (auto i : order) out.padded.rows.push_back(std::move(rows[i]));
  }
  return out;
}

SetupOutput setup(const Scheme& scheme, const SecretKeys& keys, const PlainDatabase& db,
                  Rng& rng) {
  const auto& p = scheme.params;
  p.validate();
  keys.validate(p);
  for (const auto& r : db.rows) {
    validate_record(r, p);
    if (!r.real) throw_parameter("setup expects real rows only");
  }

  SetupOutput out;
  auto grouping = group_gen(scheme, keys, db);
  out.warnings = std::move(grouping.warnings);
  auto padded = dummy_gen(scheme, db, grouping.groups, rng);
  out.sigma_max = padded.sigma_max;

  auto& store = out.store;
  for (const auto& [key, meta] : grouping.groups) {
    store.gdb[key] = GroupEntry{{}, seal_meta(meta, keys.s1, rng)};
  }

  store.edb.reserve(padded.padded.rows.size());
  store.ndb.reserve(padded.padded.rows.size());
  for (const auto& rcd : padded.padded.rows) {
    const RecordId id = store.edb.size();
    auto enc = client::rcd_enc(scheme, keys, rcd, rng);
    for (std::size_t f = 0; f < p.field_count; ++f) {
      // NULL cells may encode to a group no universe element produced
      auto key = closest_group(store.gdb, f, enc.groups[f]);
      if (!key) throw_protocol("no group exists in field " + std::to_string(f));
      store.gdb[*key].il.push_back(id);
    }
    store.edb.push_back(std::move(enc.record));
    store.ndb.push_back(std::move(enc.nonce));
  }
  return out;
}

std::vector<Record> decrypt_store(const SchemeParams& params, const SecretKeys& keys,
                                  const std::vector<EncryptedRecord>& edb,
                                  const std::vector<NonceEntry>& ndb) {
  if (edb.size() != ndb.size()) throw_protocol("EDB and NDB are not aligned");
  std::vector<Record> rows;
  rows.reserve(edb.size());
  for (std::size_t i = 0; i < edb.size(); ++i) {
    rows.push_back(client::open_record(params, keys, edb[i], ndb[i].nonce));
  }
  return rows;
}

GroupTable open_directory(const GroupDirectory& gdb, const SecretKeys& keys) {
  GroupTable out;
  for (const auto& [key, entry] : gdb) out[key] = open_meta(entry.meta_ct, keys.s1);
  return out;
}

bool padding_holds(const GroupTable& groups, const std::vector<Record>& rows,
                   std::string* failure) {
  std::map<std::pair<std::size_t, Element>, std::uint64_t> counts;
  for (const auto& r : rows) {
    for (std::size_t f = 0; f < r.elements.size(); ++f) {
      if (!is_null(r.elements[f])) ++counts[{f, r.elements[f]}];
    }
  }
  for (const auto& [key, meta] : groups) {
    for (const auto& e : meta.elements) {
      auto it = counts.find({key.field, e});
      const std::uint64_t n = it == counts.end() ? 0 : it->second;
      if (n != meta.tau) {
        if (failure != nullptr) {
          *failure = "group " + to_string(key) + " element '" + display_element(e) +
                     "' occurs " + std::to_string(n) + " times, tau=" + std::to_string(meta.tau);
        }
        return false;
      }
    }
  }
  return true;
}

CompactReport compact(const Scheme& scheme, const SecretKeys& keys, EncryptedStore& store,
                      Rng& rng) {
  const auto& p = scheme.params;
  CompactReport report;
  auto rows = decrypt_store(p, keys, store.edb, store.ndb);
  auto groups = open_directory(store.gdb, keys);
  std::vector<bool> modified(rows.size(), false);
  for (const auto& [key, entry] : store.gdb) {
    for (auto id : entry.il) {
      if (id >= rows.size()) throw_protocol("index list refers past the end of EDB");
    }
  }

  std::vector<GroupKey> null_group(p.field_count);
  for (std::size_t f = 0; f < p.field_count; ++f) {
    auto key = closest_group(store.gdb, f, scheme.group_of(keys.s1, f, null_element(p)));
    if (!key) return report;  // empty directory: nothing to compact
    null_group[f] = *key;
  }

  auto null_count = [&](RecordId id) {
    return std::count_if(rows[id].elements.begin(), rows[id].elements.end(),
                         [](const Element& e) { return is_null(e); });
  };

  std::set<GroupKey> touched;
  bool progress = true;
  while (progress) {
    progress = false;
    for (auto& [key, meta] : groups) {
      if (meta.elements.empty() || meta.tau == 0) continue;
      const auto& il = store.gdb.at(key).il;
      std::map<Element, RecordId> pick;
      for (auto id : il) {
        const auto& r = rows[id];
        if (r.real || is_null(r.elements[key.field])) continue;
        if (!meta.elements.contains(r.elements[key.field])) continue;
        auto [it, fresh] = pick.emplace(r.elements[key.field], id);
        // prefer the dummy closest to all-NULL, then the lowest id
        if (!fresh && (null_count(id) > null_count(it->second) ||
                       (null_count(id) == null_count(it->second) && id < it->second))) {
          it->second = id;
        }
      }
      if (pick.size() != meta.elements.size()) continue;
      for (const auto& [e, id] : pick) {
        rows[id].elements[key.field] = null_element(p);
        modified[id] = true;
        ++report.nulled_slots;
      }
      --meta.tau;
      touched.insert(key);
      // the NULLed slots now belong to the NULL sentinel's group
      auto& src = store.gdb.at(key).il;
      auto& dst = store.gdb.at(null_group[key.field]).il;
      for (const auto& [e, id] : pick) {
        src.erase(std::find(src.begin(), src.end(), id));
        dst.push_back(id);
      }
      progress = true;
    }
  }

  std::vector<std::int64_t> remap(rows.size(), -1);
  EncryptedStore next;
  for (RecordId id = 0; id < rows.size(); ++id) {
    if (!rows[id].real && null_count(id) == static_cast<std::ptrdiff_t>(p.field_count)) {
      ++report.removed_records;
      continue;
    }
    remap[id] = static_cast<std::int64_t>(next.edb.size());
    if (modified[id]) {
      auto enc = client::rcd_enc(scheme, keys, rows[id], rng);
      next.edb.push_back(std::move(enc.record));
      next.ndb.push_back(std::move(enc.nonce));
    } else {
      next.edb.push_back(std::move(store.edb[id]));
      next.ndb.push_back(std::move(store.ndb[id]));
    }
  }
  for (auto& [key, entry] : store.gdb) {
    GroupEntry e;
    for (auto id : entry.il) {
      if (remap[id] >= 0) e.il.push_back(static_cast<RecordId>(remap[id]));
    }
    e.meta_ct = touched.contains(key) ? seal_meta(groups.at(key), keys.s1, rng)
                                      : std::move(entry.meta_ct);
    next.gdb.emplace(key, std::move(e));
  }
  store = std::move(next);
  return report;
}

}  // namespace pmcdb::admin
