#pragma once

#include <cstdint>
#include <memory>
#include <span>

#include "tokengate/common/bytes.hpp"

namespace tokengate {

class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;

  template <std::size_t N>
  ByteArray<N> bytes() {
    ByteArray<N> out{};
    fill(out);
    return out;
  }
  std::uint64_t next_u64();
};

// Operating-system CSPRNG. Used by socket mode.
class SystemRandom final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

// Seeded ChaCha20 keystream. Every key, nonce and filler in a simulation run
// comes from one of these so that a fixed seed reproduces the run exactly.
class DeterministicRandom final : public RandomSource {
 public:
  explicit DeterministicRandom(std::uint64_t seed);
  void fill(std::span<std::uint8_t> out) override;

 private:
  SecretArray<32> key_;
  std::uint64_t block_ = 0;
  ByteArray<64> buffer_{};
  std::size_t used_ = 64;
};

}  // namespace tokengate
