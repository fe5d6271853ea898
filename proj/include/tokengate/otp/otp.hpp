#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "tokengate/common/bytes.hpp"
#include "tokengate/common/crypto.hpp"

// Yubico-OTP-compatible codec: ModHex text, CRC16 check, 16-byte block layout
// and single-block AES-128 encryption.
namespace tokengate::otp {

inline constexpr std::string_view kModhexAlphabet = "cbdefghijklnrtuv";
inline constexpr std::uint16_t kCrcResidual = 0xF0B8;
inline constexpr std::size_t kPublicIdSize = 6;
inline constexpr std::size_t kOtpTextLength = 44;

using PublicId = ByteArray<kPublicIdSize>;
using PrivateId = ByteArray<6>;
using OtpBlock = ByteArray<16>;
using OtpSecret = crypto::AesKey;

std::string modhex_encode(ByteView bytes);
// Throws Error{OddLength} or Error{InvalidChar}.
Bytes modhex_decode(std::string_view text);

// Bit-serial CRC: reflected polynomial 0x8408, init 0xFFFF, no final XOR.
std::uint16_t crc16(ByteView bytes);

struct OtpPlain {
  PrivateId private_id{};
  std::uint16_t use_counter = 0;
  std::uint32_t timestamp = 0;  // 24 bits significant
  std::uint8_t session_counter = 0;
  std::uint16_t random = 0;
  std::uint16_t crc = 0;

  friend bool operator==(const OtpPlain&, const OtpPlain&) = default;
};

// Serializes little-endian and sets the trailing check field to
// ~crc16(first 14 bytes), so crc16 over all 16 bytes yields kCrcResidual.
// The incoming crc field is ignored.
OtpBlock otp_pack(const OtpPlain& plain);
// Throws Error{BadLength} unless exactly 16 bytes. Does not check the CRC.
OtpPlain otp_unpack(ByteView block);

// The 44-character token output.
class OtpString {
 public:
  // Throws Error{BadFormat} on wrong length or alphabet.
  static OtpString parse(std::string_view text);

  const std::string& text() const { return text_; }
  std::string_view public_id_text() const { return std::string_view(text_).substr(0, 12); }
  std::string_view body_text() const { return std::string_view(text_).substr(12); }

  friend bool operator==(const OtpString&, const OtpString&) = default;

 private:
  explicit OtpString(std::string text) : text_(std::move(text)) {}
  std::string text_;
};

struct VerifiedOtp {
  PublicId public_id{};
  OtpPlain plain;
};

OtpString otp_generate(const OtpSecret& secret, const PublicId& public_id, const OtpPlain& plain);

// Throws Error{BadFormat} or Error{BadCrc}.
VerifiedOtp otp_verify(const OtpSecret& secret, const OtpString& otp);
VerifiedOtp otp_verify(const OtpSecret& secret, std::string_view otp_text);

}  // namespace tokengate::otp
