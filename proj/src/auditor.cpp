#include "pmcdb/auditor.hpp"

#include <algorithm>
#include <cstring>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pmcdb/codec.hpp"

namespace pmcdb::audit {

namespace {

using Pick = std::pair<GroupKey, Element>;

std::vector<Pick> all_elements(const admin::GroupTable& groups) {
  std::vector<Pick> out;
  for (const auto& [key, meta] : groups) {
    for (const auto& e : meta.elements) out.emplace_back(key, e);
  }
  return out;
}

std::vector<Record> real_rows(const std::vector<Record>& rows) {
  std::vector<Record> out;
  for (const auto& r : rows) {
    if (r.real) out.push_back(r);
  }
  return out;
}

std::vector<Record> matching(const std::vector<Record>& rows, std::size_t f, const Element& e) {
  std::vector<Record> out;
  for (const auto& r : rows) {
    if (r.elements[f] == e) out.push_back(r);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Drawn from a small namespace so long workloads do not widen groups without
// bound.
Element fresh_element(const SchemeParams& p, Rng& rng) {
  std::string text = "n" + std::to_string(rng.uniform(8));
  if (text.size() > p.elem_len) text.resize(p.elem_len);
  return pad_element(text, p);
}

// A row mixing existing elements with occasional new ones.
Record random_row(const SchemeParams& p, const admin::GroupTable& groups, Rng& rng) {
  Record r;
  r.real = true;
  for (std::size_t f = 0; f < p.field_count; ++f) {
    std::vector<const Element*> pool;
    for (auto it = groups.lower_bound(GroupKey{f, GroupId{}});
         it != groups.end() && it->first.field == f; ++it) {
      for (const auto& e : it->second.elements) pool.push_back(&e);
    }
    if (pool.empty() || rng.uniform(8) == 0) {
      r.elements.push_back(fresh_element(p, rng));
    } else {
      r.elements.push_back(*pool[rng.uniform(pool.size())]);
    }
  }
  return r;
}

std::size_t count_stale(const SchemeParams& p, const std::vector<EncryptedRecord>& edb,
                        const EncryptedQuery& eq, const std::vector<Witness>& en) {
  std::set<Bytes> stale;
  for (const auto& x : en) stale.insert(x.w);
  std::size_t hits = 0;
  Bytes block(p.elem_len);
  for (const auto& rec : edb) {
    auto field = rec.field(eq.field, p);
    for (std::size_t i = 0; i < block.size(); ++i) block[i] = field[i] ^ eq.e_star[i];
    if (stale.contains(public_hash(block, p.witness_len))) ++hits;
  }
  return hits;
}

}  // namespace

// ---- size pattern ----------------------------------------------------------

bool SizePatternReport::uniform() const {
  return std::all_of(groups.begin(), groups.end(), [](const auto& g) { return g.uniform; });
}

SizePatternReport audit_size_pattern(Deployment& d) {
  SizePatternReport report;
  for (const auto& [key, meta] : d.groups()) {
    GroupSizeVerdict v;
    v.key = key;
    v.tau = meta.tau;
    for (const auto& e : meta.elements) {
      auto t = d.user().select(Query{QueryType::Select, key.field, e});
      ++report.queries;
      v.sizes[display_element(e)] = t.result_size;
      if (t.key != key || t.result_size != meta.tau) v.uniform = false;
    }
    report.groups.push_back(std::move(v));
  }
  return report;
}

// ---- forward privacy -------------------------------------------------------

ForwardReport audit_forward(Deployment& d, std::size_t trials, Rng& rng) {
  ForwardReport report;
  const auto& p = d.scheme().params;
  for (std::size_t i = 0; i < trials; ++i) {
    auto picks = all_elements(d.groups());
    if (picks.empty()) break;
    const auto& [key, e] = picks[rng.uniform(picks.size())];
    auto trace = d.user().select(Query{QueryType::Select, key.field, e}, /*shuffle=*/false);

    // negative control: without a shuffle the captured witnesses still work
    auto replay = d.sss().search(trace.session.eq, trace.il, trace.en);
    if (replay.matched != trace.matched) ++report.control_failures;

    d.user().shuffle(trace.key);
    if (i % 2 == 1) {
      auto row = random_row(p, d.groups(), rng);
      row.elements[key.field] = e;
      d.user().run_insert(row);
      ++report.insert_trials;
    }
    report.stale_matches += count_stale(p, d.sss().edb(), trace.session.eq, trace.en);
    ++report.trials;
  }
  return report;
}

// ---- backward privacy ------------------------------------------------------

BackwardReport audit_backward(Deployment& d, std::size_t operations, Rng& rng) {
  BackwardReport report;
  const auto& p = d.scheme().params;
  auto shadow = real_rows(d.decrypt_all());
  std::multiset<Record> deleted;

  auto do_delete = [&](std::size_t f, const Element& e) {
    auto expect = matching(shadow, f, e);
    auto n = d.user().run_delete(Query{QueryType::Delete, f, e});
    if (n != expect.size()) {
      ++report.mismatches;
      report.failure = "delete of '" + display_element(e) + "' removed " + std::to_string(n) +
                       " rows, shadow holds " + std::to_string(expect.size());
    }
    std::erase_if(shadow, [&](const Record& r) { return r.elements[f] == e; });
    deleted.insert(expect.begin(), expect.end());
    ++report.deletes;
  };

  auto do_select = [&](std::size_t f, const Element& e) {
    auto got = d.user().run_select(Query{QueryType::Select, f, e});
    std::sort(got.begin(), got.end());
    auto expect = matching(shadow, f, e);
    ++report.selects;
    if (got == expect) return;
    ++report.mismatches;
    report.failure = "select of '" + display_element(e) + "' returned " +
                     std::to_string(got.size()) + " rows, shadow holds " +
                     std::to_string(expect.size());
    std::vector<Record> extra;
    std::set_difference(got.begin(), got.end(), expect.begin(), expect.end(),
                        std::back_inserter(extra));
    for (const auto& r : extra) {
      if (deleted.contains(r)) ++report.leaked_rows;
    }
  };

  auto picks = all_elements(d.groups());
  if (picks.empty()) return report;
  const auto target = picks[rng.uniform(picks.size())];
  do_delete(target.first.field, target.second);

  for (std::size_t i = 0; i < operations; ++i) {
    ++report.operations;
    picks = all_elements(d.groups());
    const auto roll = rng.uniform(10);
    if (roll < 3) {
      do_select(target.first.field, target.second);
    } else if (roll < 6) {
      const auto& [key, e] = picks[rng.uniform(picks.size())];
      do_select(key.field, e);
    } else if (roll < 8) {
      auto row = random_row(p, d.groups(), rng);
      d.user().run_insert(row);
      shadow.push_back(row);
      ++report.inserts;
    } else {
      const auto& [key, e] = picks[rng.uniform(picks.size())];
      do_delete(key.field, e);
    }
  }
  report.padding_ok = admin::padding_holds(d.groups(), d.decrypt_all(), &report.failure);
  return report;
}

// ---- untraceability --------------------------------------------------------

UntraceReport audit_untraceability(Deployment& d, const GroupKey& key, std::size_t trials) {
  UntraceReport report;
  report.key = key;
  auto groups = d.groups();
  auto it = groups.find(key);
  if (it == groups.end() || it->second.elements.empty()) {
    throw_parameter("untraceability audit needs a non-empty group");
  }
  const Element e = *it->second.elements.begin();
  std::set<std::vector<RecordId>> match_sets;

  for (std::size_t i = 0; i < trials; ++i) {
    const auto before = d.sss().edb();
    const std::size_t mark = d.log().size();
    auto t = d.user().select(Query{QueryType::Select, key.field, e});
    report.group_size = t.il.size();
    const auto& after = d.sss().edb();
    for (auto id : t.il) {
      ++report.positions_checked;
      if (before[id].bytes != after[id].bytes) ++report.positions_refreshed;
    }
    auto matched = t.matched;
    std::sort(matched.begin(), matched.end());
    match_sets.insert(matched);

    // the permutation as the RSS received it
    auto log = d.log().entries_since(mark);
    for (std::size_t j = 0; j < log.size(); ++j) {
      if (log[j].to != Role::Rss || log[j].msg.type != wire::MsgType::ShuffleReq) continue;
      auto plan = wire::decode_shuffle_req(log[j].msg).plan;
      std::vector<std::pair<RecordId, RecordId>> moves;
      for (std::size_t k = 0; k < plan.il.size(); ++k) moves.emplace_back(plan.il[k], plan.il_prime[k]);
      std::sort(moves.begin(), moves.end());
      std::vector<RecordId> perm;
      for (const auto& m : moves) perm.push_back(m.second);
      ++report.permutations[perm];
    }
    ++report.trials;
  }
  report.distinct_match_sets = match_sets.size();
  return report;
}

// ---- isolation -------------------------------------------------------------

namespace {

std::uint64_t window_hash(const std::uint8_t* p) {
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  std::memcpy(&a, p, 8);
  std::memcpy(&b, p + 8, 8);
  std::uint64_t h = (a ^ (b * 0x9E3779B97F4A7C15ull)) * 0xBF58476D1CE4E5B9ull;
  return h ^ (h >> 31);
}

std::uint8_t tag_of(std::uint64_t h) {
  const auto t = static_cast<std::uint8_t>(h >> 56);
  return t == 0 ? 1 : t;
}

}  // namespace

void SecretCatalog::Table::grow() {
  const std::size_t cap = tags_.empty() ? 1024 : tags_.size() * 2;
  auto old_tags = std::move(tags_);
  auto old_keys = std::move(keys_);
  auto old_rules = std::move(rules_);
  tags_.assign(cap, 0);
  keys_.resize(cap);
  rules_.resize(cap);
  count_ = 0;
  for (std::size_t i = 0; i < old_tags.size(); ++i) {
    if (old_tags[i] != 0) insert(old_keys[i], old_rules[i]);
  }
}

void SecretCatalog::Table::insert(const Chunk& c, std::uint16_t rule) {
  if ((count_ + 1) * 2 > tags_.size()) grow();
  const auto h = window_hash(c.data());
  const auto tag = tag_of(h);
  const std::size_t mask = tags_.size() - 1;
  for (std::size_t i = h & mask;; i = (i + 1) & mask) {
    if (tags_[i] == 0) {
      tags_[i] = tag;
      keys_[i] = c;
      rules_[i] = rule;
      ++count_;
      return;
    }
    if (tags_[i] == tag && keys_[i] == c) return;
  }
}

int SecretCatalog::Table::find(const std::uint8_t* p) const {
  if (tags_.empty()) return -1;
  const auto h = window_hash(p);
  const auto tag = tag_of(h);
  const std::size_t mask = tags_.size() - 1;
  for (std::size_t i = h & mask; tags_[i] != 0; i = (i + 1) & mask) {
    if (tags_[i] == tag && std::memcmp(keys_[i].data(), p, kWindow) == 0) return rules_[i];
  }
  return -1;
}

void SecretCatalog::forbid(Role role, const std::string& rule, ByteView secret) {
  auto name = std::find(rule_names_.begin(), rule_names_.end(), rule);
  const auto idx = static_cast<std::uint16_t>(name - rule_names_.begin());
  if (name == rule_names_.end()) rule_names_.push_back(rule);
  auto& table = windows_[role];
  for (std::size_t off = 0; off + kWindow <= secret.size(); off += kWindow) {
    Chunk c;
    std::copy_n(secret.begin() + off, kWindow, c.begin());
    table.insert(c, idx);
  }
}

std::optional<std::string> SecretCatalog::scan(Role role, ByteView payload) const {
  auto it = windows_.find(role);
  if (it == windows_.end() || payload.size() < kWindow) return std::nullopt;
  const auto& table = it->second;
  for (std::size_t off = 0; off + kWindow <= payload.size(); ++off) {
    const int hit = table.find(payload.data() + off);
    if (hit >= 0) {
      return rule_names_[static_cast<std::size_t>(hit)] + " at payload offset " +
             std::to_string(off);
    }
  }
  return std::nullopt;
}

std::size_t SecretCatalog::size() const {
  std::size_t n = 0;
  for (const auto& [role, table] : windows_) n += table.size();
  return n;
}

void catalog_from_log(const std::vector<LogEntry>& log, SecretCatalog& catalog) {
  using wire::MsgType;
  for (const auto& entry : log) {
    const auto& m = entry.msg;
    switch (m.type) {
      case MsgType::NonceReq:
        catalog.forbid(Role::Sss, "eta", wire::decode_nonce_req(m).eta);
        break;
      case MsgType::Query: {
        auto q = wire::decode_query(m);
        catalog.forbid(Role::Iws, "query element e*", q.eq.e_star);
        catalog.forbid(Role::Rss, "query element e*", q.eq.e_star);
        break;
      }
      case MsgType::WitnessSet:
        for (const auto& x : wire::decode_witness_set(m).en) catalog.forbid(Role::Rss, "witness w", x.w);
        break;
      case MsgType::InsertIds:
        for (const auto& n : wire::decode_insert_ids(m).entries) {
          catalog.forbid(Role::Sss, "seed", n.seed);
          catalog.forbid(Role::Sss, "nonce", n.nonce);
        }
        break;
      case MsgType::Insert:
        for (const auto& r : wire::decode_insert(m).records) catalog.forbid(Role::Iws, "record", r.bytes);
        break;
      case MsgType::ShuffleData:
        for (const auto& [id, r] : wire::decode_shuffle_data(m).records) {
          catalog.forbid(Role::Iws, "record", r.bytes);
        }
        break;
      case MsgType::ShuffledRecords:
        for (const auto& [id, r] : wire::decode_shuffled_records(m).records) {
          catalog.forbid(Role::Iws, "record", r.bytes);
        }
        break;
      case MsgType::SearchResult:
        for (const auto& e : wire::decode_search_result(m).sr.entries) {
          catalog.forbid(Role::Iws, "record", e.record.bytes);
        }
        break;
      default:
        break;
    }
  }
}

void catalog_from_store(const EncryptedStore& store, const SecretKeys& keys,
                        SecretCatalog& catalog) {
  for (Role r : {Role::Sss, Role::Iws, Role::Rss}) {
    catalog.forbid(r, "key s1", keys.s1);
    catalog.forbid(r, "key s2", keys.s2);
  }
  for (const auto& n : store.ndb) {
    catalog.forbid(Role::Sss, "seed", n.seed);
    catalog.forbid(Role::Sss, "nonce", n.nonce);
  }
  for (const auto& r : store.edb) catalog.forbid(Role::Iws, "record", r.bytes);
}

std::vector<Violation> isolation_audit(const std::vector<LogEntry>& log,
                                       const SecretCatalog& catalog) {
  using wire::MsgType;
  static const std::map<Role, std::set<MsgType>> allowed = {
      {Role::Sss,
       {MsgType::Query, MsgType::WitnessSet, MsgType::Insert, MsgType::DeleteTags,
        MsgType::FetchRecords, MsgType::ShuffledRecords, MsgType::Revoke}},
      {Role::Iws,
       {MsgType::NonceReq, MsgType::MetaFetch, MsgType::InsertIds, MsgType::PreShuffle,
        MsgType::Revoke}},
      {Role::Rss, {MsgType::ShuffleReq, MsgType::ShuffleData}},
  };
  std::vector<Violation> out;
  for (const auto& entry : log) {
    auto rules = allowed.find(entry.to);
    if (rules == allowed.end()) continue;  // user-side traffic
    if (!rules->second.contains(entry.msg.type)) {
      out.push_back({entry.seq, entry.to, "message type",
                     std::string(wire::to_string(entry.msg.type)) + " delivered from " +
                         std::string(to_string(entry.from))});
    }
    if (auto hit = catalog.scan(entry.to, entry.msg.payload)) {
      out.push_back({entry.seq, entry.to, "forbidden content",
                     std::string(wire::to_string(entry.msg.type)) + " carries " + *hit});
    }
  }
  return out;
}

namespace {

// Adds the NDB entries and EDB records that differ from `prev`.
void catalog_changes(const EncryptedStore& now, const EncryptedStore& prev,
                     SecretCatalog& catalog) {
  for (std::size_t i = 0; i < now.ndb.size(); ++i) {
    if (i < prev.ndb.size() && now.ndb[i] == prev.ndb[i]) continue;
    catalog.forbid(Role::Sss, "seed", now.ndb[i].seed);
    catalog.forbid(Role::Sss, "nonce", now.ndb[i].nonce);
  }
  for (std::size_t i = 0; i < now.edb.size(); ++i) {
    if (i < prev.edb.size() && now.edb[i] == prev.edb[i]) continue;
    catalog.forbid(Role::Iws, "record", now.edb[i].bytes);
  }
}

}  // namespace

FuzzStats fuzz_workload(Deployment& d, std::size_t operations, Rng& rng,
                        SecretCatalog* catalog) {
  FuzzStats stats;
  const auto& p = d.scheme().params;
  EncryptedStore prev;
  if (catalog != nullptr) {
    prev = d.snapshot();
    catalog_from_store(prev, d.keys(), *catalog);
  }
  for (std::size_t i = 0; i < operations; ++i) {
    auto groups = d.groups();
    auto picks = all_elements(groups);
    const auto roll = rng.uniform(10);
    if (picks.empty() || roll < 2) {
      d.user().run_insert(random_row(p, groups, rng));
      ++stats.inserts;
    } else if (roll < 9) {
      const auto& [key, e] = picks[rng.uniform(picks.size())];
      d.user().run_select(Query{QueryType::Select, key.field, e});
      ++stats.selects;
    } else {
      const auto& [key, e] = picks[rng.uniform(picks.size())];
      d.user().run_delete(Query{QueryType::Delete, key.field, e});
      ++stats.deletes;
    }
    if (catalog != nullptr) {
      auto now = d.snapshot();
      catalog_changes(now, prev, *catalog);
      prev = std::move(now);
    }
  }
  return stats;
}

// ---- reporting -------------------------------------------------------------

namespace {

nlohmann::json key_json(const GroupKey& k) {
  return {{"field", k.field}, {"group", to_hex(k.group.bits)}};
}

}  // namespace

std::string to_json_lines(const PatternReport& r) {
  std::ostringstream out;
  auto emit = [&](nlohmann::json j) { out << j.dump() << '\n'; };
  if (r.size) {
    for (const auto& g : r.size->groups) {
      emit({{"audit", "size_pattern"}, {"group", key_json(g.key)}, {"tau", g.tau},
            {"sizes", g.sizes}, {"uniform", g.uniform}});
    }
    emit({{"audit", "size_pattern"}, {"summary", true}, {"queries", r.size->queries},
          {"uniform", r.size->uniform()}});
  }
  if (r.forward) {
    const auto& f = *r.forward;
    emit({{"audit", "forward"}, {"trials", f.trials}, {"insert_trials", f.insert_trials},
          {"stale_matches", f.stale_matches}, {"control_failures", f.control_failures},
          {"ok", f.ok()}});
  }
  if (r.backward) {
    const auto& b = *r.backward;
    emit({{"audit", "backward"}, {"operations", b.operations}, {"selects", b.selects},
          {"inserts", b.inserts}, {"deletes", b.deletes}, {"leaked_rows", b.leaked_rows},
          {"mismatches", b.mismatches}, {"padding_ok", b.padding_ok}, {"failure", b.failure},
          {"ok", b.ok()}});
  }
  if (r.untrace) {
    const auto& u = *r.untrace;
    nlohmann::json perms = nlohmann::json::array();
    for (const auto& [perm, n] : u.permutations) perms.push_back({{"map", perm}, {"count", n}});
    emit({{"audit", "untraceability"}, {"group", key_json(u.key)}, {"trials", u.trials},
          {"group_size", u.group_size}, {"positions_checked", u.positions_checked},
          {"positions_refreshed", u.positions_refreshed},
          {"distinct_match_sets", u.distinct_match_sets},
          {"distinct_permutations", u.permutations.size()}, {"permutations", perms}});
  }
  if (r.isolation) {
    for (const auto& v : *r.isolation) {
      emit({{"audit", "isolation"}, {"seq", v.seq}, {"role", to_string(v.role)},
            {"rule", v.rule}, {"detail", v.detail}});
    }
    emit({{"audit", "isolation"}, {"summary", true}, {"violations", r.isolation->size()},
          {"ok", r.isolation->empty()}});
  }
  return out.str();
}

std::string to_text(const PatternReport& r) {
  std::ostringstream out;
  if (r.size) {
    out << "size pattern: " << (r.size->uniform() ? "uniform" : "NOT uniform") << " over "
        << r.size->groups.size() << " groups, " << r.size->queries << " queries\n";
    for (const auto& g : r.size->groups) {
      out << "  " << to_string(g.key) << " tau=" << g.tau << " sizes=";
      bool first = true;
      for (const auto& [e, n] : g.sizes) {
        out << (first ? "" : ",") << e << ':' << n;
        first = false;
      }
      out << (g.uniform ? "" : "  <-- differs") << '\n';
    }
    out << "  note: queries on different groups may still be told apart\n";
  }
  if (r.forward) {
    const auto& f = *r.forward;
    out << "forward privacy: " << (f.ok() ? "ok" : "FAILED") << " (" << f.trials << " trials, "
        << f.insert_trials << " with a later matching insert, " << f.stale_matches
        << " stale matches, " << f.control_failures << " control failures)\n";
  }
  if (r.backward) {
    const auto& b = *r.backward;
    out << "backward privacy: " << (b.ok() ? "ok" : "FAILED") << " (" << b.operations
        << " ops: " << b.selects << " selects, " << b.inserts << " inserts, " << b.deletes
        << " deletes; leaked " << b.leaked_rows << ", mismatches " << b.mismatches
        << ", padding " << (b.padding_ok ? "holds" : "broken") << ")\n";
    if (!b.failure.empty()) out << "  " << b.failure << '\n';
  }
  if (r.untrace) {
    const auto& u = *r.untrace;
    out << "untraceability: group " << to_string(u.key) << " of " << u.group_size
        << " records, " << u.trials << " trials; ciphertext refreshed at "
        << u.positions_refreshed << '/' << u.positions_checked << " positions; "
        << u.distinct_match_sets << " distinct match sets; " << u.permutations.size()
        << " distinct permutations\n";
  }
  if (r.isolation) {
    out << "isolation: " << r.isolation->size() << " violations\n";
    for (const auto& v : *r.isolation) {
      out << "  #" << v.seq << ' ' << to_string(v.role) << ' ' << v.rule << ": " << v.detail
          << '\n';
    }
  }
  return out.str();
}

}  // namespace pmcdb::audit
