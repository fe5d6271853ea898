#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tokengate/dataplane/frame.hpp"
#include "tokengate/mgmt/session.hpp"
#include "tokengate/token/token_device.hpp"

namespace tokengate::gateway {

enum class Mode { PassThrough, Member };
enum class Led { Off, Green, Red };
std::string_view to_string(Mode m);
std::string_view to_string(Led l);

inline constexpr std::uint64_t kErrorBlinkTicks = 2000;

// What a gateway holds after provisioning.
struct GatewayIdentity {
  std::string gateway_id;
  crypto::DhKeyPair static_key;
  MacAddress macsec_address;
  std::string mgmt_address;
  crypto::DhPublic server_public_key{};
  std::string server_mgmt_address;
};

// Gateway-side state machine. Inputs are processed one at a time; every
// method returns the management bodies or frames the gateway emits.
class GatewayAgent {
 public:
  GatewayAgent(GatewayIdentity identity, RandomSource& rng, std::uint64_t handshake_counter = 0);

  const GatewayIdentity& identity() const { return identity_; }
  const std::string& id() const { return identity_.gateway_id; }

  // Management plane. connect() starts a fresh handshake and returns the
  // initiation body; the counter it carries is persisted state.
  Bytes connect(std::uint64_t now);
  std::vector<Bytes> on_management(std::uint64_t now, ByteView body);
  // Emits a heartbeat when one is due.
  std::vector<Bytes> tick(std::uint64_t now);
  void connection_lost();
  bool has_session() const { return session_.has_value(); }
  std::uint64_t handshake_counter() const { return handshake_counter_; }

  // Token hosting. plug() also plugs the device.
  void plug(token::TokenDevice& device, std::uint64_t now);
  void unplug();
  const token::TokenDevice* hosted_token() const { return token_; }
  // Throws Error{NoToken} or Error{NoSession}; both blink the LED red.
  std::vector<Bytes> on_button_press(std::uint64_t now);

  // Channel configuration, reachable only through the authenticated session.
  // Throws Error{ChannelConflict}.
  void apply_channel_config(std::uint64_t now, const mgmt::ChannelConfigBody& config);
  void apply_channel_update(std::uint64_t now, const mgmt::ChannelUpdateBody& update);
  void apply_teardown(const mgmt::ChannelTeardownBody& teardown);

  // Data plane.
  std::vector<Bytes> from_endpoint(std::uint64_t now, ByteView frame);
  std::optional<Bytes> from_network(std::uint64_t now, ByteView frame);

  Mode mode() const { return channel_ ? Mode::Member : Mode::PassThrough; }
  Led led(std::uint64_t now) const;
  const dataplane::ChannelState* channel() const { return channel_ ? &*channel_ : nullptr; }
  std::optional<std::string> sec_id() const;
  std::optional<std::uint32_t> key_version() const;
  std::uint64_t last_heartbeat() const { return last_heartbeat_; }
  const std::string& last_error() const { return last_error_; }
  std::uint64_t anomalies() const { return anomalies_; }
  std::uint64_t configs_applied() const { return configs_applied_; }
  // Dropped management bodies and data frames by error code name.
  const std::map<std::string, std::uint64_t>& rejections() const { return rejections_; }

  // `gatewayId mode secID keyVersion led lastHeartbeat`; "-" for absent
  // secID and keyVersion.
  std::string status_line(std::uint64_t now) const;

  // Persistent state for socket mode: identity and handshake counter. Channel
  // state is not persisted; the server resends it on reconnect.
  nlohmann::json to_state() const;
  static GatewayAgent from_state(const nlohmann::json& state, RandomSource& rng);

 private:
  Bytes seal(const mgmt::MessageBody& body);
  void count(Errc code) { ++rejections_[std::string(to_string(code))]; }
  void blink(std::uint64_t now, std::string code);

  GatewayIdentity identity_;
  RandomSource* rng_;
  std::uint64_t handshake_counter_;
  std::optional<mgmt::HandshakeInitiator> pending_;
  std::optional<mgmt::Session> session_;
  std::uint64_t next_heartbeat_ = 0;
  std::uint64_t last_heartbeat_ = 0;
  token::TokenDevice* token_ = nullptr;
  std::optional<dataplane::ChannelState> channel_;
  std::uint64_t red_until_ = 0;
  bool red_ = false;
  std::string last_error_;
  std::uint64_t anomalies_ = 0;
  std::uint64_t configs_applied_ = 0;
  std::map<std::string, std::uint64_t> rejections_;
};

}  // namespace tokengate::gateway
