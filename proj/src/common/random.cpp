#include "tokengate/common/random.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <algorithm>
#include <memory>

#include "tokengate/common/crypto.hpp"
#include "tokengate/common/error.hpp"

namespace tokengate {

std::uint64_t RandomSource::next_u64() {
  auto b = bytes<8>();
  std::uint64_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

void SystemRandom::fill(std::span<std::uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    throw Error(Errc::Io, "RAND_bytes failed");
  }
}

DeterministicRandom::DeterministicRandom(std::uint64_t seed) {
  ByteWriter w;
  w.raw(ByteView{reinterpret_cast<const std::uint8_t*>("tokengate-drbg-v1"), 17});
  w.u64_be(seed);
  key_ = SecretArray<32>(crypto::sha256(w.bytes()));
}

void DeterministicRandom::fill(std::span<std::uint8_t> out) {
  std::size_t written = 0;
  while (written < out.size()) {
    if (used_ == buffer_.size()) {
      // One 64-byte ChaCha20 block per refill; the 16-byte IV is the
      // little-endian block counter followed by a zero nonce.
      ByteArray<16> iv{};
      for (int i = 0; i < 8; ++i) iv[i] = static_cast<std::uint8_t>(block_ >> (8 * i));
      ++block_;
      std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)> ctx(EVP_CIPHER_CTX_new(),
                                                                           &EVP_CIPHER_CTX_free);
      ByteArray<64> zeros{};
      int len = 0;
      if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_chacha20(), nullptr, key_.data(), iv.data()) != 1 ||
          EVP_EncryptUpdate(ctx.get(), buffer_.data(), &len, zeros.data(), 64) != 1) {
        throw Error(Errc::Io, "chacha20 keystream failed");
      }
      used_ = 0;
    }
    std::size_t n = std::min(out.size() - written, buffer_.size() - used_);
    std::copy_n(buffer_.begin() + static_cast<std::ptrdiff_t>(used_), n,
                out.begin() + static_cast<std::ptrdiff_t>(written));
    used_ += n;
    written += n;
  }
}

}  // namespace tokengate
