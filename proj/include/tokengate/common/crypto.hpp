#pragma once

#include <optional>
#include <utility>

#include "tokengate/common/bytes.hpp"
#include "tokengate/common/random.hpp"

// Thin wrappers over libcrypto. Sizes are fixed at the type level so call
// sites cannot mix up keys, nonces and digests.
namespace tokengate::crypto {

using AesKey = SecretArray<16>;
using AesBlock = ByteArray<16>;
using Digest = ByteArray<32>;
using AeadKey = SecretArray<32>;
using AeadNonce = ByteArray<12>;

inline constexpr std::size_t kAeadTagSize = 16;

AesBlock aes128_encrypt_block(const AesKey& key, const AesBlock& block);
AesBlock aes128_decrypt_block(const AesKey& key, const AesBlock& block);

Digest sha256(ByteView data);
Digest hmac_sha256(ByteView key, ByteView data);

// Noise-style two-output HKDF over HMAC-SHA256.
std::pair<Digest, Digest> hkdf2(const Digest& chaining_key, ByteView input_key_material);

// ChaCha20-Poly1305 (RFC 8439). seal returns ciphertext || 16-byte tag.
Bytes aead_seal(const AeadKey& key, const AeadNonce& nonce, ByteView ad, ByteView plaintext);
std::optional<Bytes> aead_open(const AeadKey& key, const AeadNonce& nonce, ByteView ad,
                               ByteView ciphertext_and_tag);

// X25519.
using DhPublic = ByteArray<32>;
using DhPrivate = SecretArray<32>;

struct DhKeyPair {
  DhPrivate priv;
  DhPublic pub{};
};

DhKeyPair dh_generate(RandomSource& rng);
DhPublic dh_public_from_private(const DhPrivate& priv);
// Throws Error{AuthFail} on a low-order peer point (all-zero shared secret).
SecretArray<32> dh(const DhPrivate& priv, const DhPublic& peer);

// Constant-time comparison.
bool equal(ByteView a, ByteView b);

}  // namespace tokengate::crypto
