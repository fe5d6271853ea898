#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "tokengate/common/random.hpp"
#include "tokengate/otp/otp.hpp"

#include "json.hpp"

namespace tokengate::token {

// A simulated hardware token. The secret never leaves the object except
// inside the encrypted block of an emitted OTP (and the device image file,
// which stands in for the physical item).
class TokenDevice {
 public:
  TokenDevice(std::string serial, RandomSource& rng);

  const std::string& serial() const { return serial_; }
  const otp::PublicId& public_id() const { return public_id_; }
  std::uint16_t use_counter() const { return use_counter_; }
  std::uint8_t session_counter() const { return session_counter_; }
  const std::optional<std::string>& plugged_into() const { return plugged_; }
  bool plugged() const { return plugged_.has_value(); }

  // Writes a new identity and secret. Only reachable through provisioning.
  void program(const otp::PublicId& public_id, const otp::PrivateId& private_id,
               const otp::OtpSecret& secret);

  // Throws Error{AlreadyPlugged}.
  void plug(const std::string& gateway_id, std::uint64_t now);
  void unplug();

  // Emits one OTP with the current counters, then advances the session
  // counter. Throws Error{NotPlugged}.
  otp::OtpString press(std::uint64_t now, RandomSource& rng);

  // Device image for socket mode; contains the secret by nature.
  nlohmann::json to_image() const;
  static TokenDevice from_image(const nlohmann::json& image);

  // Test-only view used by hygiene scans to know what must never leak.
  const otp::OtpSecret& secret_for_audit() const { return secret_; }

 private:
  TokenDevice() = default;

  std::string serial_;
  otp::PublicId public_id_{};
  otp::PrivateId private_id_{};
  otp::OtpSecret secret_;
  std::uint16_t use_counter_ = 0;
  std::uint8_t session_counter_ = 0;
  std::uint64_t plugged_at_ = 0;
  std::optional<std::string> plugged_;
};

// Owns every token in one simulation and enforces serial uniqueness.
class TokenInventory {
 public:
  // Throws Error{DuplicateSerial}.
  TokenDevice& create(const std::string& serial, RandomSource& rng);
  TokenDevice* find(const std::string& serial);
  const TokenDevice* find(const std::string& serial) const;
  // Throws Error{UnknownToken}.
  TokenDevice& at(const std::string& serial);

  const std::map<std::string, TokenDevice>& all() const { return devices_; }

 private:
  std::map<std::string, TokenDevice> devices_;
};

}  // namespace tokengate::token
