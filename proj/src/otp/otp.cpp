#include "tokengate/otp/otp.hpp"

#include <algorithm>

#include "tokengate/common/error.hpp"

namespace tokengate::otp {

std::string modhex_encode(ByteView bytes) {
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kModhexAlphabet[b >> 4]);
    out.push_back(kModhexAlphabet[b & 0x0f]);
  }
  return out;
}

namespace {

int modhex_value(char c) {
  auto pos = kModhexAlphabet.find(c);
  return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}

}  // namespace

Bytes modhex_decode(std::string_view text) {
  if (text.size() % 2 != 0) throw Error(Errc::OddLength);
  Bytes out;
  out.reserve(text.size() / 2);
  for (std::size_t i = 0; i < text.size(); i += 2) {
    int hi = modhex_value(text[i]);
    int lo = modhex_value(text[i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::InvalidChar);
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

std::uint16_t crc16(ByteView bytes) {
  std::uint16_t crc = 0xFFFF;
  for (auto b : bytes) {
    crc ^= b;
    for (int i = 0; i < 8; ++i) {
      bool lsb = crc & 1;
      crc >>= 1;
      if (lsb) crc ^= 0x8408;
    }
  }
  return crc;
}

OtpBlock otp_pack(const OtpPlain& plain) {
  OtpBlock block{};
  std::copy(plain.private_id.begin(), plain.private_id.end(), block.begin());
  block[6] = static_cast<std::uint8_t>(plain.use_counter);
  block[7] = static_cast<std::uint8_t>(plain.use_counter >> 8);
  block[8] = static_cast<std::uint8_t>(plain.timestamp);
  block[9] = static_cast<std::uint8_t>(plain.timestamp >> 8);
  block[10] = static_cast<std::uint8_t>(plain.timestamp >> 16);
  block[11] = plain.session_counter;
  block[12] = static_cast<std::uint8_t>(plain.random);
  block[13] = static_cast<std::uint8_t>(plain.random >> 8);
  std::uint16_t check = static_cast<std::uint16_t>(~crc16(ByteView{block.data(), 14}));
  block[14] = static_cast<std::uint8_t>(check);
  block[15] = static_cast<std::uint8_t>(check >> 8);
  return block;
}

OtpPlain otp_unpack(ByteView block) {
  if (block.size() != 16) throw Error(Errc::BadLength, "OTP block must be 16 bytes");
  OtpPlain p;
  std::copy_n(block.begin(), 6, p.private_id.begin());
  p.use_counter = static_cast<std::uint16_t>(block[6] | (block[7] << 8));
  p.timestamp = static_cast<std::uint32_t>(block[8] | (block[9] << 8) | (block[10] << 16));
  p.session_counter = block[11];
  p.random = static_cast<std::uint16_t>(block[12] | (block[13] << 8));
  p.crc = static_cast<std::uint16_t>(block[14] | (block[15] << 8));
  return p;
}

OtpString OtpString::parse(std::string_view text) {
  if (text.size() != kOtpTextLength) throw Error(Errc::BadFormat, "OTP must be 44 characters");
  if (!std::all_of(text.begin(), text.end(), [](char c) { return modhex_value(c) >= 0; })) {
    throw Error(Errc::BadFormat, "OTP contains non-ModHex characters");
  }
  return OtpString(std::string(text));
}

OtpString otp_generate(const OtpSecret& secret, const PublicId& public_id, const OtpPlain& plain) {
  auto block = otp_pack(plain);
  auto encrypted = crypto::aes128_encrypt_block(secret, block);
  secure_zero(block);
  return OtpString::parse(modhex_encode(public_id) + modhex_encode(encrypted));
}

VerifiedOtp otp_verify(const OtpSecret& secret, const OtpString& otp) {
  VerifiedOtp out;
  auto pid = modhex_decode(otp.public_id_text());
  std::copy(pid.begin(), pid.end(), out.public_id.begin());
  auto body = modhex_decode(otp.body_text());
  crypto::AesBlock encrypted{};
  std::copy(body.begin(), body.end(), encrypted.begin());
  auto block = crypto::aes128_decrypt_block(secret, encrypted);
  bool ok = crc16(block) == kCrcResidual;
  if (ok) out.plain = otp_unpack(block);
  secure_zero(block);
  if (!ok) throw Error(Errc::BadCrc);
  return out;
}

VerifiedOtp otp_verify(const OtpSecret& secret, std::string_view otp_text) {
  return otp_verify(secret, OtpString::parse(otp_text));
}

}  // namespace tokengate::otp
