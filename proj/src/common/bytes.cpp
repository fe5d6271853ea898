#include "tokengate/common/bytes.hpp"

#include <openssl/crypto.h>

#include "tokengate/common/error.hpp"

namespace tokengate {

std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Bytes from_hex(std::string_view text) {
  if (text.size() % 2 != 0) throw Error(Errc::BadFormat, "odd-length hex");
  Bytes out;
  out.reserve(text.size() / 2);
  for (std::size_t i = 0; i < text.size(); i += 2) {
    int hi = hex_value(text[i]);
    int lo = hex_value(text[i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::BadFormat, "non-hex character");
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

void secure_zero(std::span<std::uint8_t> bytes) noexcept {
  if (!bytes.empty()) OPENSSL_cleanse(bytes.data(), bytes.size());
}

void ByteWriter::u16_be(std::uint16_t v) {
  u8(static_cast<std::uint8_t>(v >> 8));
  u8(static_cast<std::uint8_t>(v));
}

void ByteWriter::u32_be(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) u8(static_cast<std::uint8_t>(v >> shift));
}

void ByteWriter::u64_be(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) u8(static_cast<std::uint8_t>(v >> shift));
}

void ByteWriter::u16_le(std::uint16_t v) {
  u8(static_cast<std::uint8_t>(v));
  u8(static_cast<std::uint8_t>(v >> 8));
}

void ByteWriter::blob16(ByteView bytes) {
  if (bytes.size() > 0xffff) throw Error(Errc::MalformedMessage, "blob too long");
  u16_be(static_cast<std::uint16_t>(bytes.size()));
  raw(bytes);
}

void ByteWriter::str16(std::string_view s) {
  blob16({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

ByteReader::ByteReader(ByteView bytes, Errc underrun_code)
    : bytes_(bytes), underrun_code_(underrun_code) {}

void ByteReader::need(std::size_t n) const {
  if (remaining() < n) throw Error(underrun_code_, "truncated input");
}

std::uint8_t ByteReader::u8() {
  need(1);
  return bytes_[pos_++];
}

std::uint16_t ByteReader::u16_be() {
  need(2);
  std::uint16_t v = static_cast<std::uint16_t>((bytes_[pos_] << 8) | bytes_[pos_ + 1]);
  pos_ += 2;
  return v;
}

std::uint32_t ByteReader::u32_be() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_++];
  return v;
}

std::uint64_t ByteReader::u64_be() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | bytes_[pos_++];
  return v;
}

std::uint16_t ByteReader::u16_le() {
  need(2);
  std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
  pos_ += 2;
  return v;
}

ByteView ByteReader::raw(std::size_t n) {
  need(n);
  auto v = bytes_.subspan(pos_, n);
  pos_ += n;
  return v;
}

Bytes ByteReader::blob16() {
  auto n = u16_be();
  auto v = raw(n);
  return {v.begin(), v.end()};
}

std::string ByteReader::str16() {
  auto b = blob16();
  return {b.begin(), b.end()};
}

ByteView ByteReader::rest() {
  auto v = bytes_.subspan(pos_);
  pos_ = bytes_.size();
  return v;
}

}  // namespace tokengate
