#include "tokengate/token/token_device.hpp"


#include "tokengate/common/error.hpp"

namespace tokengate::token {

TokenDevice::TokenDevice(std::string serial, RandomSource& rng)
    : serial_(std::move(serial)),
      public_id_(rng.bytes<6>()),
      private_id_(rng.bytes<6>()),
      secret_(rng.bytes<16>()) {}

void TokenDevice::program(const otp::PublicId& public_id, const otp::PrivateId& private_id,
                          const otp::OtpSecret& secret) {
  public_id_ = public_id;
  private_id_ = private_id;
  secret_ = secret;
}

void TokenDevice::plug(const std::string& gateway_id, std::uint64_t now) {
  if (plugged_) throw Error(Errc::AlreadyPlugged, serial_ + " is plugged into " + *plugged_);
  ++use_counter_;
  session_counter_ = 0;
  plugged_at_ = now;
  plugged_ = gateway_id;
}

void TokenDevice::unplug() { plugged_.reset(); }

otp::OtpString TokenDevice::press(std::uint64_t now, RandomSource& rng) {
  if (!plugged_) throw Error(Errc::NotPlugged, serial_);
  otp::OtpPlain plain;
  plain.private_id = private_id_;
  plain.use_counter = use_counter_;
  // The session tick runs at 8 Hz relative to plug-in (ticks are ms).
  plain.timestamp = static_cast<std::uint32_t>(((now - plugged_at_) * 8 / 1000) & 0xFFFFFF);
  plain.session_counter = session_counter_;
  auto filler = rng.bytes<2>();
  plain.random = static_cast<std::uint16_t>(filler[0] | (filler[1] << 8));
  auto otp = otp::otp_generate(secret_, public_id_, plain);
  if (session_counter_ == 0xFF) {
    // Session counter exhausted: roll over into the next use counter like the
    // hardware does, keeping emitted counter pairs strictly increasing.
    ++use_counter_;
    session_counter_ = 0;
  } else {
    ++session_counter_;
  }
  return otp;
}

nlohmann::json TokenDevice::to_image() const {
  return {
      {"format", "tokengate-token"},
      {"version", 1},
      {"serial", serial_},
      {"public_id", to_hex(public_id_)},
      {"private_id", to_hex(private_id_)},
      {"secret", to_hex(secret_.view())},
      {"use_counter", use_counter_},
      {"session_counter", session_counter_},
  };
}

TokenDevice TokenDevice::from_image(const nlohmann::json& image) {
  try {
    if (image.at("format") != "tokengate-token" || image.at("version") != 1) {
      throw Error(Errc::BadFormat, "not a token image");
    }
    TokenDevice d;
    d.serial_ = image.at("serial").get<std::string>();
    d.public_id_ = array_from_hex<6>(image.at("public_id").get<std::string>());
    d.private_id_ = array_from_hex<6>(image.at("private_id").get<std::string>());
    d.secret_ = otp::OtpSecret(array_from_hex<16>(image.at("secret").get<std::string>()));
    d.use_counter_ = image.at("use_counter").get<std::uint16_t>();
    d.session_counter_ = image.at("session_counter").get<std::uint8_t>();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadFormat, e.what());
  }
}

TokenDevice& TokenInventory::create(const std::string& serial, RandomSource& rng) {
  if (devices_.contains(serial)) throw Error(Errc::DuplicateSerial, serial);
  return devices_.emplace(serial, TokenDevice(serial, rng)).first->second;
}

TokenDevice* TokenInventory::find(const std::string& serial) {
  auto it = devices_.find(serial);
  return it == devices_.end() ? nullptr : &it->second;
}

const TokenDevice* TokenInventory::find(const std::string& serial) const {
  auto it = devices_.find(serial);
  return it == devices_.end() ? nullptr : &it->second;
}

TokenDevice& TokenInventory::at(const std::string& serial) {
  auto* d = find(serial);
  if (!d) throw Error(Errc::UnknownToken, serial);
  return *d;
}

}  // namespace tokengate::token
