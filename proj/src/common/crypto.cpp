#include "tokengate/common/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <memory>

#include "tokengate/common/error.hpp"

namespace tokengate::crypto {

namespace {

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)>;
using PkeyPtr = std::unique_ptr<EVP_PKEY, decltype(&EVP_PKEY_free)>;
using PkeyCtx = std::unique_ptr<EVP_PKEY_CTX, decltype(&EVP_PKEY_CTX_free)>;

CipherCtx new_cipher_ctx() {
  CipherCtx ctx(EVP_CIPHER_CTX_new(), &EVP_CIPHER_CTX_free);
  if (!ctx) throw Error(Errc::Io, "EVP_CIPHER_CTX_new failed");
  return ctx;
}

[[noreturn]] void fail(const char* what) { throw Error(Errc::Io, what); }

AesBlock aes_block(const AesKey& key, const AesBlock& in, bool encrypt) {
  auto ctx = new_cipher_ctx();
  if (EVP_CipherInit_ex(ctx.get(), EVP_aes_128_ecb(), nullptr, key.data(), nullptr, encrypt ? 1 : 0) != 1) {
    fail("aes init");
  }
  EVP_CIPHER_CTX_set_padding(ctx.get(), 0);
  AesBlock out{};
  int len = 0;
  if (EVP_CipherUpdate(ctx.get(), out.data(), &len, in.data(), static_cast<int>(in.size())) != 1 ||
      len != 16) {
    fail("aes update");
  }
  return out;
}

}  // namespace

AesBlock aes128_encrypt_block(const AesKey& key, const AesBlock& block) {
  return aes_block(key, block, true);
}

AesBlock aes128_decrypt_block(const AesKey& key, const AesBlock& block) {
  return aes_block(key, block, false);
}

Digest sha256(ByteView data) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1) {
    fail("sha256");
  }
  return out;
}

Digest hmac_sha256(ByteView key, ByteView data) {
  Digest out{};
  unsigned int len = 0;
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(),
           out.data(), &len) == nullptr) {
    fail("hmac");
  }
  return out;
}

std::pair<Digest, Digest> hkdf2(const Digest& chaining_key, ByteView input_key_material) {
  auto temp = hmac_sha256(chaining_key, input_key_material);
  ByteArray<1> one{0x01};
  auto out1 = hmac_sha256(temp, one);
  ByteArray<33> buf{};
  std::copy(out1.begin(), out1.end(), buf.begin());
  buf[32] = 0x02;
  auto out2 = hmac_sha256(temp, buf);
  secure_zero(temp);
  return {out1, out2};
}

Bytes aead_seal(const AeadKey& key, const AeadNonce& nonce, ByteView ad, ByteView plaintext) {
  auto ctx = new_cipher_ctx();
  if (EVP_EncryptInit_ex(ctx.get(), EVP_chacha20_poly1305(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_IVLEN, 12, nullptr) != 1 ||
      EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1) {
    fail("aead init");
  }
  int len = 0;
  if (!ad.empty() &&
      EVP_EncryptUpdate(ctx.get(), nullptr, &len, ad.data(), static_cast<int>(ad.size())) != 1) {
    fail("aead ad");
  }
  Bytes out(plaintext.size() + kAeadTagSize);
  if (!plaintext.empty() && EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                                              static_cast<int>(plaintext.size())) != 1) {
    fail("aead update");
  }
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + plaintext.size(), &len) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_GET_TAG, kAeadTagSize,
                          out.data() + plaintext.size()) != 1) {
    fail("aead final");
  }
  return out;
}

std::optional<Bytes> aead_open(const AeadKey& key, const AeadNonce& nonce, ByteView ad,
                               ByteView ciphertext_and_tag) {
  if (ciphertext_and_tag.size() < kAeadTagSize) return std::nullopt;
  std::size_t ct_len = ciphertext_and_tag.size() - kAeadTagSize;
  auto ctx = new_cipher_ctx();
  if (EVP_DecryptInit_ex(ctx.get(), EVP_chacha20_poly1305(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_IVLEN, 12, nullptr) != 1 ||
      EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1) {
    fail("aead init");
  }
  int len = 0;
  if (!ad.empty() &&
      EVP_DecryptUpdate(ctx.get(), nullptr, &len, ad.data(), static_cast<int>(ad.size())) != 1) {
    return std::nullopt;
  }
  Bytes out(ct_len);
  if (ct_len > 0 && EVP_DecryptUpdate(ctx.get(), out.data(), &len, ciphertext_and_tag.data(),
                                      static_cast<int>(ct_len)) != 1) {
    return std::nullopt;
  }
  ByteArray<kAeadTagSize> tag{};
  std::copy(ciphertext_and_tag.begin() + static_cast<std::ptrdiff_t>(ct_len), ciphertext_and_tag.end(),
            tag.begin());
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_TAG, kAeadTagSize, tag.data()) != 1) {
    return std::nullopt;
  }
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + ct_len, &len) != 1) {
    secure_zero(out);
    return std::nullopt;
  }
  return out;
}

DhPublic dh_public_from_private(const DhPrivate& priv) {
  PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr, priv.data(), 32), &EVP_PKEY_free);
  if (!key) fail("x25519 private key");
  DhPublic pub{};
  std::size_t len = pub.size();
  if (EVP_PKEY_get_raw_public_key(key.get(), pub.data(), &len) != 1 || len != 32) fail("x25519 public");
  return pub;
}

DhKeyPair dh_generate(RandomSource& rng) {
  DhKeyPair kp;
  rng.fill(kp.priv.span());
  kp.pub = dh_public_from_private(kp.priv);
  return kp;
}

SecretArray<32> dh(const DhPrivate& priv, const DhPublic& peer) {
  PkeyPtr own(EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr, priv.data(), 32), &EVP_PKEY_free);
  PkeyPtr other(EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, peer.data(), 32), &EVP_PKEY_free);
  if (!own || !other) fail("x25519 keys");
  PkeyCtx ctx(EVP_PKEY_CTX_new(own.get(), nullptr), &EVP_PKEY_CTX_free);
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1) fail("x25519 derive init");
  if (EVP_PKEY_derive_set_peer(ctx.get(), other.get()) != 1) {
    throw Error(Errc::AuthFail, "invalid peer public key");
  }
  SecretArray<32> shared;
  std::size_t len = 32;
  if (EVP_PKEY_derive(ctx.get(), shared.data(), &len) != 1 || len != 32) {
    throw Error(Errc::AuthFail, "x25519 derivation failed");
  }
  ByteArray<32> zero{};
  if (equal(shared.view(), zero)) throw Error(Errc::AuthFail, "low-order peer public key");
  return shared;
}

bool equal(ByteView a, ByteView b) {
  return a.size() == b.size() && CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace tokengate::crypto
