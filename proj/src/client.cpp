#include "pmcdb/client.hpp"

#include <algorithm>

#include "pmcdb/error.hpp"

namespace pmcdb::client {

EncryptedRow rcd_enc(const Scheme& scheme, const SecretKeys& keys, const Record& rcd, Rng& rng) {
  const auto& p = scheme.params;
  validate_record(rcd, p);
  EncryptedRow out;
  out.nonce.seed = rng.bytes(p.seed_len());
  out.nonce.nonce = prg_expand(keys.s2, out.nonce.seed, p);
  out.record.bytes.resize(p.record_len());
  out.groups.reserve(p.field_count);
  for (std::size_t f = 0; f < p.field_count; ++f) {
    out.groups.push_back(scheme.group_of(keys.s1, f, rcd.elements[f]));
    Bytes block = det_encrypt(keys.s1, rcd.elements[f], p);
    xor_into(block, NonceView::field(out.nonce.nonce, f, p));
    std::copy(block.begin(), block.end(), out.record.bytes.begin() + f * p.elem_len);
  }
  Bytes tag = tag_make(rcd.real, NonceView::tag(out.nonce.nonce, p), keys.s1, p, rng);
  std::copy(tag.begin(), tag.end(), out.record.tag_mut(p).begin());
  return out;
}

Record open_record(const SchemeParams& p, const SecretKeys& keys, const EncryptedRecord& ercd,
                   ByteView nonce) {
  if (ercd.bytes.size() != p.record_len() || nonce.size() != p.nonce_len()) {
    throw_protocol("record or nonce length mismatch");
  }
  Record r;
  r.elements.reserve(p.field_count);
  for (std::size_t f = 0; f < p.field_count; ++f) {
    Bytes block = xor_bytes(ercd.field(f, p), NonceView::field(nonce, f, p));
    r.elements.push_back(det_decrypt(keys.s1, block, p));
  }
  r.real = tag_check(ercd.tag(p), NonceView::tag(nonce, p), keys.s1, p);
  return r;
}

QuerySession query_enc(const Scheme& scheme, const SecretKeys& keys, const Query& q, Rng& rng) {
  const auto& p = scheme.params;
  if (q.field >= p.field_count) throw_parameter("query field out of range");
  if (q.element.size() != p.elem_len) throw_parameter("query element length mismatch");
  QuerySession s;
  s.group = scheme.group_of(keys.s1, q.field, q.element);
  s.eta = rng.bytes(p.elem_len);
  s.eq.type = q.type;
  s.eq.field = q.field;
  s.eq.e_star = det_encrypt(keys.s1, q.element, p);
  xor_into(s.eq.e_star, s.eta);
  return s;
}

Decrypted rcd_dec(const SchemeParams& p, const SecretKeys& keys, const SearchResult& sr,
                  ByteView eta) {
  Decrypted out;
  for (const auto& entry : sr.entries) {
    if (entry.t.size() != p.seed_len() || eta.size() != p.seed_len() ||
        entry.record.bytes.size() != p.record_len()) {
      ++out.malformed;
      continue;
    }
    Bytes seed = xor_bytes(entry.t, eta);
    Bytes nonce = prg_expand(keys.s2, seed, p);
    if (!tag_check(entry.record.tag(p), NonceView::tag(nonce, p), keys.s1, p)) {
      ++out.dummies;
      continue;
    }
    out.records.push_back(open_record(p, keys, entry.record, nonce));
  }
  return out;
}

InsertBundle build_insert(const Scheme& scheme, const SecretKeys& keys, const Record& rcd,
                          const std::vector<FetchedMeta>& metas, Rng& rng) {
  const auto& p = scheme.params;
  validate_record(rcd, p);
  if (metas.size() != p.field_count) throw_parameter("need one group meta per field");
  for (const auto& e : rcd.elements) {
    if (is_null(e)) throw_parameter("a real record cannot hold the NULL sentinel");
  }

  InsertBundle bundle;
  std::vector<GroupMeta> opened;
  opened.reserve(p.field_count);
  for (std::size_t f = 0; f < p.field_count; ++f) {
    if (metas[f].key.field != f) throw_parameter("group meta field mismatch");
    opened.push_back(open_meta(metas[f].meta_ct, keys.s1));
  }

  bundle.gammas.resize(p.field_count);
  for (std::size_t f = 0; f < p.field_count; ++f) {
    const auto& meta = opened[f];
    if (meta.elements.contains(rcd.elements[f])) {
      bundle.gammas[f] = meta.elements.size() - 1;
    } else {
      // an empty group (τ = 0) takes the new element at occurrence 1
      bundle.gammas[f] = static_cast<std::size_t>(std::max<std::uint64_t>(meta.tau, 1) - 1);
    }
  }
  const std::size_t w = *std::max_element(bundle.gammas.begin(), bundle.gammas.end());
  bundle.dummy_count = w;

  std::vector<Record> dummies(w, Record{std::vector<Element>(p.field_count, null_element(p)),
                                        false});
  for (std::size_t f = 0; f < p.field_count; ++f) {
    auto& meta = opened[f];
    const Element& e = rcd.elements[f];
    if (meta.elements.contains(e)) {
      std::size_t slot = 0;
      for (const auto& other : meta.elements) {
        if (other == e) continue;
        dummies[slot++].elements[f] = other;
      }
      ++meta.tau;
    } else {
      for (std::size_t i = 0; i < bundle.gammas[f]; ++i) dummies[i].elements[f] = e;
      meta.elements.insert(e);
      meta.tau = std::max<std::uint64_t>(meta.tau, 1);
    }
    bundle.updated_meta.emplace_back(metas[f].key, seal_meta(meta, keys.s1, rng));
    bundle.metas_after.push_back(meta);
  }

  Record real = rcd;
  real.real = true;
  bundle.items.push_back({rcd_enc(scheme, keys, real, rng), real});
  for (auto& d : dummies) bundle.items.push_back({rcd_enc(scheme, keys, d, rng), d});

  // Random order so the SSS cannot spot the real row by its position.
  for (std::size_t i = bundle.items.size(); i > 1; --i) {
    std::swap(bundle.items[i - 1], bundle.items[rng.uniform(i)]);
  }
  return bundle;
}

DeleteRewrite rebuild_delete_tags(const SchemeParams& p, const SecretKeys& keys,
                                  const std::set<RecordId>& matched,
                                  const std::vector<SearchedTag>& searched, ByteView eta,
                                  Rng& rng) {
  DeleteRewrite out;
  out.tags.reserve(searched.size());
  for (const auto& s : searched) {
    if (s.t.size() != p.seed_len()) {
      throw_protocol("missing witness t for record " + std::to_string(s.id));
    }
    Bytes nonce = prg_expand(keys.s2, xor_bytes(s.t, eta), p);
    ByteView n_tag = NonceView::tag(nonce, p);
    const bool real = tag_check(s.tag, n_tag, keys.s1, p);
    if (matched.contains(s.id)) {
      if (real) ++out.matched_real;
      out.tags.emplace_back(s.id, rng.bytes(p.tag_len()));
    } else {
      out.tags.emplace_back(s.id, tag_make(real, n_tag, keys.s1, p, rng));
    }
  }
  return out;
}

}  // namespace pmcdb::client
