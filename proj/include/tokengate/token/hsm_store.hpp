#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "tokengate/common/bytes.hpp"
#include "tokengate/otp/otp.hpp"

namespace tokengate::token {

// Opaque reference to an OTP secret held by the HSM.
struct HsmHandle {
  std::uint32_t value = 0;
  friend auto operator<=>(const HsmHandle&, const HsmHandle&) = default;
};

using MasterKey = SecretArray<32>;

inline constexpr const char* kMasterKeyEnv = "TOKENGATE_HSM_MASTER_KEY";

// Reads 64 hex characters from TOKENGATE_HSM_MASTER_KEY. Throws Error{Usage}
// when the variable is missing or malformed.
MasterKey master_key_from_env();

// Simulated hardware security module. It verifies OTPs against secrets it
// holds but offers no operation that hands a secret back. It also wraps other
// key material (channel keys, the server's static key) so that persisted
// server state never carries it in the clear.
class HsmStore {
 public:
  explicit HsmStore(const MasterKey& master_key);

  HsmHandle store(const otp::PublicId& public_id, const otp::PrivateId& private_id, const otp::OtpSecret& secret);
  // Throws Error{UnknownHandle}, Error{BadFormat}, Error{BadCrc},
  // Error{PublicIdMismatch} or Error{PrivateIdMismatch}.
  otp::OtpPlain verify(HsmHandle handle, const otp::OtpString& otp) const;
  bool contains(HsmHandle handle) const { return entries_.contains(handle); }
  // Destroys the secret; later verifications report UnknownHandle.
  void erase(HsmHandle handle);
  std::size_t size() const { return entries_.size(); }

  // Authenticated wrapping bound to a caller-chosen label. The label must be
  // unique per distinct plaintext (the nonce is derived from it).
  Bytes wrap(ByteView key_material, std::string_view label) const;
  // Throws Error{CorruptStore} when the blob or label does not authenticate.
  Bytes unwrap(ByteView blob, std::string_view label) const;

  // Versioned JSON container; every entry is sealed under the master key.
  std::string serialize() const;
  // Throws Error{CorruptStore} on a damaged file or wrong master key.
  static HsmStore deserialize(std::string_view document, const MasterKey& master_key);
  void save(const std::filesystem::path& path) const;
  static HsmStore load(const std::filesystem::path& path, const MasterKey& master_key);

 private:
  struct Entry {
    otp::PublicId public_id{};
    otp::PrivateId private_id{};
    otp::OtpSecret secret;
  };

  MasterKey master_key_;
  SecretArray<32> seal_key_;
  SecretArray<32> wrap_key_;
  std::map<HsmHandle, Entry> entries_;
  std::uint32_t next_handle_ = 1;
};

}  // namespace tokengate::token
