#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokengate/common/error.hpp"

namespace tokengate {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

template <std::size_t N>
using ByteArray = std::array<std::uint8_t, N>;

std::string to_hex(ByteView bytes);
// Throws Error{BadFormat} on odd length or non-hex characters.
Bytes from_hex(std::string_view text);

template <std::size_t N>
ByteArray<N> array_from_hex(std::string_view text);

// Overwrites memory in a way the optimizer may not elide.
void secure_zero(std::span<std::uint8_t> bytes) noexcept;

// Fixed-size key material, wiped on destruction and on reassignment.
template <std::size_t N>
class SecretArray {
 public:
  SecretArray() { bytes_.fill(0); }
  explicit SecretArray(const ByteArray<N>& bytes) : bytes_(bytes) {}
  SecretArray(const SecretArray&) = default;
  SecretArray& operator=(const SecretArray& other) {
    if (this != &other) {
      wipe();
      bytes_ = other.bytes_;
    }
    return *this;
  }
  ~SecretArray() { wipe(); }

  static constexpr std::size_t size() { return N; }
  const std::uint8_t* data() const { return bytes_.data(); }
  std::uint8_t* data() { return bytes_.data(); }
  ByteView view() const { return {bytes_.data(), N}; }
  std::span<std::uint8_t> span() { return {bytes_.data(), N}; }
  const ByteArray<N>& array() const { return bytes_; }

  void wipe() noexcept { secure_zero(std::span<std::uint8_t>{bytes_.data(), N}); }

  friend bool operator==(const SecretArray& a, const SecretArray& b) {
    return a.bytes_ == b.bytes_;
  }

 private:
  ByteArray<N> bytes_;
};

// Big- and little-endian field writer used by the wire codecs.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16_be(std::uint16_t v);
  void u32_be(std::uint32_t v);
  void u64_be(std::uint64_t v);
  void u16_le(std::uint16_t v);
  void raw(ByteView bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }
  // u16 length prefix followed by the bytes.
  void blob16(ByteView bytes);
  void str16(std::string_view s);

  const Bytes& bytes() const& { return out_; }
  Bytes take() && { return std::move(out_); }

 private:
  Bytes out_;
};

// Bounds-checked reader; every accessor throws Error{code} on underrun.
class ByteReader {
 public:
  ByteReader(ByteView bytes, Errc underrun_code);

  std::uint8_t u8();
  std::uint16_t u16_be();
  std::uint32_t u32_be();
  std::uint64_t u64_be();
  std::uint16_t u16_le();
  ByteView raw(std::size_t n);
  template <std::size_t N>
  ByteArray<N> array() {
    ByteArray<N> out{};
    auto v = raw(N);
    std::copy(v.begin(), v.end(), out.begin());
    return out;
  }
  Bytes blob16();
  std::string str16();

  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool empty() const { return remaining() == 0; }
  ByteView rest();

 private:
  void need(std::size_t n) const;

  ByteView bytes_;
  std::size_t pos_ = 0;
  Errc underrun_code_;
};


template <std::size_t N>
ByteArray<N> array_from_hex(std::string_view text) {
  auto bytes = from_hex(text);
  if (bytes.size() != N) throw Error(Errc::BadFormat, "expected " + std::to_string(N) + " bytes");
  ByteArray<N> out{};
  std::copy(bytes.begin(), bytes.end(), out.begin());
  return out;
}

}  // namespace tokengate
