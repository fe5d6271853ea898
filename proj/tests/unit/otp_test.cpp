#include <gtest/gtest.h>

#include <array>
#include <random>
#include <set>

#include "tokengate/common/error.hpp"
#include "tokengate/otp/otp.hpp"

using namespace tokengate;
using namespace tokengate::otp;

namespace {

// Table-driven reference for the reflected 0x8408 CRC; shares no code with
// the bit-serial implementation under test.
std::uint16_t reference_crc16(ByteView bytes) {
  static const auto table = [] {
    std::array<std::uint16_t, 256> t{};
    for (unsigned n = 0; n < 256; ++n) {
      std::uint16_t c = static_cast<std::uint16_t>(n);
      for (int k = 0; k < 8; ++k) c = (c & 1) ? static_cast<std::uint16_t>((c >> 1) ^ 0x8408) : c >> 1;
      t[n] = c;
    }
    return t;
  }();
  std::uint16_t crc = 0xFFFF;
  for (auto b : bytes) crc = static_cast<std::uint16_t>((crc >> 8) ^ table[(crc ^ b) & 0xff]);
  return crc;
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::Io;
}

OtpPlain random_plain(std::mt19937_64& rng) {
  OtpPlain p;
  for (auto& b : p.private_id) b = static_cast<std::uint8_t>(rng());
  p.use_counter = static_cast<std::uint16_t>(rng());
  p.timestamp = static_cast<std::uint32_t>(rng() & 0xFFFFFF);
  p.session_counter = static_cast<std::uint8_t>(rng());
  p.random = static_cast<std::uint16_t>(rng());
  return p;
}

OtpSecret random_secret(std::mt19937_64& rng) {
  ByteArray<16> k{};
  for (auto& b : k) b = static_cast<std::uint8_t>(rng());
  return OtpSecret(k);
}

}  // namespace

TEST(Modhex, EncodesWithNibbleTable) {
  EXPECT_EQ(modhex_encode(Bytes{}), "");
  EXPECT_EQ(modhex_encode(Bytes{0x00}), "cc");
  EXPECT_EQ(modhex_encode(Bytes{0x2d, 0x34}), "dtef");
  EXPECT_EQ(modhex_encode(Bytes{0xff}), "vv");
}

TEST(Modhex, DecodesAndRejects) {
  EXPECT_EQ(modhex_decode("cc"), (Bytes{0x00}));
  EXPECT_EQ(modhex_decode("dtef"), (Bytes{0x2d, 0x34}));
  EXPECT_EQ(code_of([] { modhex_decode("cz"); }), Errc::InvalidChar);
  EXPECT_EQ(code_of([] { modhex_decode("ccc"); }), Errc::OddLength);
}

TEST(Modhex, RoundTripProperty) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    Bytes b(rng() % 40);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    auto text = modhex_encode(b);
    ASSERT_EQ(text.size(), b.size() * 2);
    ASSERT_EQ(modhex_decode(text), b);
  }
}

TEST(Crc16, FrozenValues) {
  EXPECT_EQ(crc16(Bytes{}), 0xFFFF);
  // Frozen from an independent bit-serial oracle.
  EXPECT_EQ(crc16(Bytes(14, 0x55)), 0xE0A8);
  EXPECT_EQ(crc16(Bytes(14, 0x00)), 0x5695);
}

TEST(Crc16, MatchesReferenceAndResidual) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    Bytes b(14);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    auto c = crc16(b);
    ASSERT_EQ(c, reference_crc16(b));
    // Raw CRC appended gives a zero remainder; the complemented check value
    // gives the fixed residual carried by every valid OTP block.
    Bytes raw = b;
    raw.push_back(static_cast<std::uint8_t>(c));
    raw.push_back(static_cast<std::uint8_t>(c >> 8));
    ASSERT_EQ(reference_crc16(raw), 0x0000);
    std::uint16_t check = static_cast<std::uint16_t>(~c);
    b.push_back(static_cast<std::uint8_t>(check));
    b.push_back(static_cast<std::uint8_t>(check >> 8));
    ASSERT_EQ(crc16(b), kCrcResidual);
  }
}

TEST(OtpPack, ZeroFieldsCheckValue) {
  OtpPlain zero;
  auto block = otp_pack(zero);
  EXPECT_EQ(block[14] | (block[15] << 8), static_cast<std::uint16_t>(~0x5695));
  EXPECT_EQ(otp_unpack(block).crc, 0xA96A);
  EXPECT_EQ(crc16(block), kCrcResidual);
}

TEST(OtpPack, LittleEndianLayout) {
  OtpPlain p;
  p.private_id = {1, 2, 3, 4, 5, 6};
  p.use_counter = 0x0102;
  p.timestamp = 0x030405;
  p.session_counter = 0x06;
  p.random = 0x0708;
  auto b = otp_pack(p);
  EXPECT_EQ(b[6], 0x02);
  EXPECT_EQ(b[7], 0x01);
  EXPECT_EQ(b[8], 0x05);
  EXPECT_EQ(b[9], 0x04);
  EXPECT_EQ(b[10], 0x03);
  EXPECT_EQ(b[11], 0x06);
  EXPECT_EQ(b[12], 0x08);
  EXPECT_EQ(b[13], 0x07);
}

TEST(OtpPack, RoundTripProperty) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    auto p = random_plain(rng);
    auto block = otp_pack(p);
    auto q = otp_unpack(block);
    ASSERT_EQ(crc16(block), kCrcResidual);
    p.crc = q.crc;
    ASSERT_EQ(q, p);
    ASSERT_EQ(otp_pack(q), block);
  }
}

TEST(OtpPack, RejectsWrongLength) {
  Bytes fifteen(15);
  EXPECT_EQ(code_of([&] { otp_unpack(fifteen); }), Errc::BadLength);
}

TEST(OtpPack, TruncatedBlockFailsResidual) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    auto block = otp_pack(random_plain(rng));
    EXPECT_NE(crc16(ByteView{block.data(), 15}), kCrcResidual);
  }
}

TEST(Aes, StandardVectors) {
  OtpSecret zero_key;
  crypto::AesBlock zero_block{};
  EXPECT_EQ(to_hex(crypto::aes128_encrypt_block(zero_key, zero_block)),
            "66e94bd4ef8a2c3b884cfa59ca342b2e");
  OtpSecret fips_key(array_from_hex<16>("000102030405060708090a0b0c0d0e0f"));
  auto pt = array_from_hex<16>("00112233445566778899aabbccddeeff");
  auto ct = crypto::aes128_encrypt_block(fips_key, pt);
  EXPECT_EQ(to_hex(ct), "69c4e0d86a7b0430d8cdb78070b4c55a");
  EXPECT_EQ(crypto::aes128_decrypt_block(fips_key, ct), pt);
}

TEST(Otp, GenerateVerifyRoundTrip) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    auto secret = random_secret(rng);
    PublicId pid{};
    for (auto& b : pid) b = static_cast<std::uint8_t>(rng());
    auto p = random_plain(rng);
    auto otp = otp_generate(secret, pid, p);
    ASSERT_EQ(otp.text().size(), kOtpTextLength);
    ASSERT_EQ(otp.public_id_text(), modhex_encode(pid));
    auto v = otp_verify(secret, otp);
    p.crc = v.plain.crc;
    ASSERT_EQ(v.plain, p);
    ASSERT_EQ(v.public_id, pid);
  }
}

TEST(Otp, SessionCounterChangesOutput) {
  std::mt19937_64 rng(19);
  auto secret = random_secret(rng);
  PublicId pid{1, 2, 3, 4, 5, 6};
  auto p = random_plain(rng);
  p.session_counter = 4;
  auto a = otp_generate(secret, pid, p);
  p.session_counter = 5;
  auto b = otp_generate(secret, pid, p);
  EXPECT_NE(a, b);
}

TEST(Otp, InjectiveOnSamples) {
  std::mt19937_64 rng(23);
  auto secret = random_secret(rng);
  PublicId pid{};
  std::set<std::string> seen;
  std::set<OtpBlock> blocks;
  for (int i = 0; i < 2000; ++i) {
    auto p = random_plain(rng);
    auto block = otp_pack(p);
    auto text = otp_generate(secret, pid, p).text();
    ASSERT_EQ(blocks.insert(block).second, seen.insert(text).second);
  }
}

TEST(Otp, WrongKeyRejectedStatistically) {
  std::mt19937_64 rng(29);
  auto secret = random_secret(rng);
  auto otp = otp_generate(secret, PublicId{}, random_plain(rng));
  int bad_crc = 0;
  for (int i = 0; i < 1000; ++i) {
    auto wrong = random_secret(rng);
    try {
      otp_verify(wrong, otp);
    } catch (const Error& e) {
      if (e.code() == Errc::BadCrc) ++bad_crc;
    }
  }
  EXPECT_GE(bad_crc, 990);
}

TEST(Otp, SingleCharacterMutationRejected) {
  std::mt19937_64 rng(31);
  auto secret = random_secret(rng);
  auto otp = otp_generate(secret, PublicId{9, 9, 9, 9, 9, 9}, random_plain(rng));
  int accepted = 0;
  int trials = 0;
  for (std::size_t pos = 12; pos < kOtpTextLength; ++pos) {
    for (char c : kModhexAlphabet) {
      if (c == otp.text()[pos]) continue;
      std::string mutated = otp.text();
      mutated[pos] = c;
      ++trials;
      try {
        otp_verify(secret, mutated);
        ++accepted;
      } catch (const Error& e) {
        ASSERT_EQ(e.code(), Errc::BadCrc);
      }
    }
  }
  EXPECT_EQ(trials, 32 * 15);
  EXPECT_LE(accepted, 1);
}

TEST(Otp, MalformedTextRejected) {
  OtpSecret key;
  EXPECT_EQ(code_of([&] { otp_verify(key, std::string(43, 'c')); }), Errc::BadFormat);
  EXPECT_EQ(code_of([&] { otp_verify(key, std::string(43, 'c') + "z"); }), Errc::BadFormat);
}
