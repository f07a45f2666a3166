#include "pmcdb/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>

#include <algorithm>
#include <charconv>
#include <cstring>
#include <unordered_set>

#include "pmcdb/error.hpp"

namespace pmcdb {

namespace {

constexpr std::size_t kAesBlock = 16;
constexpr std::size_t kGcmNonce = 12;
constexpr std::size_t kGcmTag = 16;

struct CipherCtx {
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  CipherCtx() {
    if (ctx == nullptr) throw Error(ErrorKind::Parameter, "EVP_CIPHER_CTX_new failed");
  }
  ~CipherCtx() { EVP_CIPHER_CTX_free(ctx); }
  CipherCtx(const CipherCtx&) = delete;
  CipherCtx& operator=(const CipherCtx&) = delete;
};

const EVP_CIPHER* ecb_for(std::size_t key_len) {
  switch (key_len) {
    case 16: return EVP_aes_128_ecb();
    case 32: return EVP_aes_256_ecb();
    default: throw_parameter("unsupported key length " + std::to_string(key_len));
  }
}

const EVP_CIPHER* ctr_for(std::size_t key_len) {
  switch (key_len) {
    case 16: return EVP_aes_128_ctr();
    case 32: return EVP_aes_256_ctr();
    default: throw_parameter("unsupported key length " + std::to_string(key_len));
  }
}

const EVP_CIPHER* gcm_for(std::size_t key_len) {
  switch (key_len) {
    case 16: return EVP_aes_128_gcm();
    case 32: return EVP_aes_256_gcm();
    default: throw_parameter("unsupported key length " + std::to_string(key_len));
  }
}

void check(int rc, const char* what) {
  if (rc != 1) throw Error(ErrorKind::Parameter, std::string("openssl: ") + what);
}

void ctr_keystream(ByteView key, ByteView iv, MutableByteView out) {
  CipherCtx c;
  check(EVP_EncryptInit_ex(c.ctx, ctr_for(key.size()), nullptr, key.data(), iv.data()),
        "ctr init");
  std::memset(out.data(), 0, out.size());
  int len = 0;
  check(EVP_EncryptUpdate(c.ctx, out.data(), &len, out.data(), static_cast<int>(out.size())),
        "ctr update");
}

Bytes ecb(ByteView key, ByteView in, bool encrypt) {
  CipherCtx c;
  check(EVP_CipherInit_ex(c.ctx, ecb_for(key.size()), nullptr, key.data(), nullptr,
                          encrypt ? 1 : 0),
        "ecb init");
  EVP_CIPHER_CTX_set_padding(c.ctx, 0);
  Bytes out(in.size());
  int len = 0;
  check(EVP_CipherUpdate(c.ctx, out.data(), &len, in.data(), static_cast<int>(in.size())),
        "ecb update");
  return out;
}

Bytes meta_subkey(ByteView s1) {
  static constexpr std::string_view kLabel = "pmcdb/group-meta";
  Bytes label(kLabel.begin(), kLabel.end());
  Bytes k = keyed_hash(s1, label);
  k.resize(s1.size() >= 32 ? 32 : 16);
  return k;
}

}  // namespace

void SchemeParams::validate() const {
  if (field_count == 0 || field_count > 0xFFFF) throw_parameter("field count out of range");
  if (elem_len == 0 || elem_len % kAesBlock != 0 || elem_len > 0xFFFF) {
    throw_parameter("element length must be a positive multiple of 16");
  }
  if (hash_len == 0 || hash_len > 32) throw_parameter("hash length must be in 1..32");
  if (witness_len == 0 || witness_len > 32) throw_parameter("witness length must be in 1..32");
  if (key_bits != 128 && key_bits != 256) throw_parameter("key bits must be 128 or 256");
  if (lambda == 0) throw_parameter("lambda must be at least 1");
}

void SecretKeys::validate(const SchemeParams& params) const {
  if (s1.size() != params.key_len() || s2.size() != params.key_len()) {
    throw_parameter("key length does not match key_bits");
  }
  if (s1 == s2) throw_parameter("s1 and s2 must differ");
}

// ---------------------------------------------------------------------------

struct Rng::Impl {
  CipherCtx cipher;
  std::array<std::uint8_t, 4096> buffer{};
  std::size_t pos = buffer.size();

  explicit Impl(ByteView key) {
    Bytes k(32);
    if (key.size() == 32) {
      std::copy(key.begin(), key.end(), k.begin());
    } else {
      k = public_hash(key, 32);
    }
    std::array<std::uint8_t, 16> iv{};
    check(EVP_EncryptInit_ex(cipher.ctx, EVP_aes_256_ctr(), nullptr, k.data(), iv.data()),
          "rng init");
  }

  void refill() {
    buffer.fill(0);
    int len = 0;
    check(EVP_EncryptUpdate(cipher.ctx, buffer.data(), &len, buffer.data(),
                            static_cast<int>(buffer.size())),
          "rng update");
    pos = 0;
  }
};

Rng::Rng() {
  std::array<std::uint8_t, 32> key{};
  if (RAND_bytes(key.data(), static_cast<int>(key.size())) != 1) {
    throw Error(ErrorKind::Parameter, "RAND_bytes failed");
  }
  impl_ = std::make_unique<Impl>(ByteView(key));
}

Rng::Rng(ByteView key) : impl_(std::make_unique<Impl>(key)) {}

Rng Rng::seeded(std::uint64_t seed) {
  std::array<std::uint8_t, 8> s{};
  for (int i = 0; i < 8; ++i) s[i] = static_cast<std::uint8_t>(seed >> (56 - 8 * i));
  return Rng(ByteView(s));
}

Rng::Rng(Rng&&) noexcept = default;
Rng& Rng::operator=(Rng&&) noexcept = default;
Rng::~Rng() = default;

void Rng::fill(MutableByteView out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (impl_->pos == impl_->buffer.size()) impl_->refill();
    std::size_t n = std::min(out.size() - done, impl_->buffer.size() - impl_->pos);
    std::memcpy(out.data() + done, impl_->buffer.data() + impl_->pos, n);
    impl_->pos += n;
    done += n;
  }
}

Bytes Rng::bytes(std::size_t n) {
  Bytes out(n);
  fill(out);
  return out;
}

std::uint64_t Rng::next_u64() {
  std::array<std::uint8_t, 8> b{};
  fill(b);
  std::uint64_t v = 0;
  for (auto c : b) v = (v << 8) | c;
  return v;
}

std::uint64_t Rng::uniform(std::uint64_t bound) {
  if (bound == 0) throw_parameter("uniform bound must be positive");
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  for (;;) {
    std::uint64_t v = next_u64();
    if (v < limit) return v % bound;
  }
}

std::array<std::uint8_t, 32> Rng::key32() {
  std::array<std::uint8_t, 32> k{};
  fill(k);
  return k;
}

SecretKeys generate_keys(const SchemeParams& params, Rng& rng) {
  SecretKeys keys;
  do {
    keys.s1 = rng.bytes(params.key_len());
    keys.s2 = rng.bytes(params.key_len());
  } while (keys.s1 == keys.s2);
  return keys;
}

// ---------------------------------------------------------------------------

Bytes keyed_hash(ByteView key, ByteView message, std::size_t hash_len) {
  if (hash_len == 0 || hash_len > 32) throw_parameter("hash length must be in 1..32");
  std::array<std::uint8_t, EVP_MAX_MD_SIZE> md{};
  unsigned int md_len = 0;
  static const std::uint8_t kEmpty = 0;
  const std::uint8_t* data = message.empty() ? &kEmpty : message.data();
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data, message.size(),
           md.data(), &md_len) == nullptr) {
    throw Error(ErrorKind::Parameter, "HMAC failed");
  }
  return Bytes(md.begin(), md.begin() + static_cast<std::ptrdiff_t>(hash_len));
}

void public_hash_into(ByteView message, MutableByteView out) {
  if (out.empty() || out.size() > 32) throw_parameter("witness length must be in 1..32");
  std::array<std::uint8_t, EVP_MAX_MD_SIZE> md{};
  unsigned int md_len = 0;
  check(EVP_Digest(message.data(), message.size(), md.data(), &md_len, EVP_sha256(), nullptr),
        "digest");
  std::memcpy(out.data(), md.data(), out.size());
}

Bytes public_hash(ByteView message, std::size_t witness_len) {
  Bytes out(witness_len);
  public_hash_into(message, out);
  return out;
}

Bytes prg_expand(ByteView s2, ByteView seed, const SchemeParams& params) {
  if (seed.size() != params.seed_len()) {
    throw_parameter("seed must be " + std::to_string(params.seed_len()) + " bytes");
  }
  // The seed is compressed to the 16-byte CTR IV so any seed length works.
  Bytes iv = public_hash(seed, kAesBlock);
  Bytes out(params.nonce_len());
  ctr_keystream(s2, iv, out);
  return out;
}

Bytes det_encrypt(ByteView s1, ByteView element, const SchemeParams& params) {
  if (element.size() != params.elem_len) {
    throw_parameter("element must be " + std::to_string(params.elem_len) + " bytes");
  }
  return ecb(s1, element, true);
}

Bytes det_decrypt(ByteView s1, ByteView block, const SchemeParams& params) {
  if (block.size() != params.elem_len) {
    throw_parameter("ciphertext must be " + std::to_string(params.elem_len) + " bytes");
  }
  return ecb(s1, block, false);
}

Bytes meta_encrypt(ByteView s1, ByteView plaintext, Rng& rng) {
  Bytes key = meta_subkey(s1);
  Bytes out(kGcmNonce + plaintext.size() + kGcmTag);
  rng.fill(MutableByteView(out.data(), kGcmNonce));
  CipherCtx c;
  check(EVP_EncryptInit_ex(c.ctx, gcm_for(key.size()), nullptr, nullptr, nullptr), "gcm init");
  check(EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_IVLEN, kGcmNonce, nullptr), "gcm ivlen");
  check(EVP_EncryptInit_ex(c.ctx, nullptr, nullptr, key.data(), out.data()), "gcm key");
  int len = 0;
  if (!plaintext.empty()) {
    check(EVP_EncryptUpdate(c.ctx, out.data() + kGcmNonce, &len, plaintext.data(),
                            static_cast<int>(plaintext.size())),
          "gcm update");
  }
  check(EVP_EncryptFinal_ex(c.ctx, out.data() + kGcmNonce + plaintext.size(), &len),
        "gcm final");
  check(EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_GET_TAG, kGcmTag,
                            out.data() + kGcmNonce + plaintext.size()),
        "gcm tag");
  return out;
}

Bytes meta_decrypt(ByteView s1, ByteView ciphertext) {
  if (ciphertext.size() < kGcmNonce + kGcmTag) {
    throw Error(ErrorKind::Auth, "group metadata ciphertext too short");
  }
  Bytes key = meta_subkey(s1);
  const std::size_t body = ciphertext.size() - kGcmNonce - kGcmTag;
  Bytes out(body);
  CipherCtx c;
  check(EVP_DecryptInit_ex(c.ctx, gcm_for(key.size()), nullptr, nullptr, nullptr), "gcm init");
  check(EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_IVLEN, kGcmNonce, nullptr), "gcm ivlen");
  check(EVP_DecryptInit_ex(c.ctx, nullptr, nullptr, key.data(), ciphertext.data()), "gcm key");
  int len = 0;
  if (body > 0) {
    check(EVP_DecryptUpdate(c.ctx, out.data(), &len, ciphertext.data() + kGcmNonce,
                            static_cast<int>(body)),
          "gcm update");
  }
  Bytes tag(ciphertext.end() - kGcmTag, ciphertext.end());
  check(EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_TAG, kGcmTag, tag.data()), "gcm tag");
  std::array<std::uint8_t, 16> scratch{};
  if (EVP_DecryptFinal_ex(c.ctx, scratch.data(), &len) != 1) {
    throw Error(ErrorKind::Auth, "group metadata failed authentication");
  }
  return out;
}

std::vector<std::uint64_t> prp_shuffle(const ShuffleSeed& seed, std::vector<std::uint64_t> ids) {
  if (ids.empty()) throw_parameter("cannot shuffle an empty id list");
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(ids.size());
  for (auto id : ids) {
    if (!seen.insert(id).second) throw_parameter("duplicate id " + std::to_string(id));
  }
  Rng rng{ByteView(seed)};
  // front to back, swap each slot with a uniformly chosen slot at or after it
  for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.uniform(ids.size() - i));
    std::swap(ids[i], ids[j]);
  }
  return ids;
}

// ---------------------------------------------------------------------------

std::string to_string(const GroupId& g) { return g.bits.empty() ? "-" : to_hex(g.bits); }

GroupId group_encode(ByteView s1, ByteView element, std::size_t bits) {
  if (bits > 8 * 32) throw_parameter("group bits exceed hash output");
  GroupId g;
  if (bits == 0) return g;
  Bytes h = keyed_hash(s1, element, 32);
  const std::size_t nbytes = (bits + 7) / 8;
  g.bits.assign(h.end() - static_cast<std::ptrdiff_t>(nbytes), h.end());
  if (bits % 8 != 0) g.bits[0] &= static_cast<std::uint8_t>((1u << (bits % 8)) - 1);
  return g;
}

KeyedGroupEncoder::KeyedGroupEncoder(std::size_t bits) : bits_(bits) {
  if (bits > 8 * 32) throw_parameter("group bits exceed hash output");
}

GroupId KeyedGroupEncoder::encode(ByteView s1, std::size_t, ByteView element) const {
  return group_encode(s1, element, bits_);
}

ModuloGroupEncoder::ModuloGroupEncoder(std::uint64_t modulus) : modulus_(modulus) {
  if (modulus == 0) throw_parameter("modulus must be positive");
}

GroupId ModuloGroupEncoder::encode(ByteView, std::size_t, ByteView element) const {
  std::size_t len = element.size();
  while (len > 0 && element[len - 1] == 0) --len;
  const char* first = reinterpret_cast<const char*>(element.data());
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  std::uint64_t g = (ec == std::errc() && ptr == first + len && len > 0) ? value % modulus_
                                                                         : modulus_;
  GroupId id;
  id.bits.resize(8);
  for (int i = 0; i < 8; ++i) id.bits[i] = static_cast<std::uint8_t>(g >> (56 - 8 * i));
  return id;
}

GroupId FixedGroupEncoder::encode(ByteView, std::size_t field, ByteView element) const {
  auto it = table_.find({field, Bytes(element.begin(), element.end())});
  return GroupId{Bytes{it == table_.end() ? std::uint8_t{0xFF} : it->second}};
}

}  // namespace pmcdb
