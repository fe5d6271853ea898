#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "tokengate/common/crypto.hpp"
#include "tokengate/common/mac_address.hpp"
#include "tokengate/mgmt/message.hpp"
#include "tokengate/token/hsm_store.hpp"

namespace tokengate::registry {

// Provisioning is only legal over an isolated link.
enum class LinkKind { Isolated, Insecure };

enum class GatewayStatus { Provisioned, Online, Offline, Decommissioned };
std::string_view to_string(GatewayStatus s);
GatewayStatus gateway_status_from(std::string_view s);

struct GatewayRecord {
  std::string gateway_id;
  crypto::DhPublic public_key{};
  std::string mgmt_address;
  MacAddress macsec_address;
  GatewayStatus status = GatewayStatus::Provisioned;
  std::uint64_t last_heartbeat = 0;
  // Highest handshake counter accepted from this gateway.
  std::uint64_t last_handshake_counter = 0;
};

enum class TokenStatus { Active, Decommissioned };
std::string_view to_string(TokenStatus s);

struct CounterPair {
  std::uint16_t use_counter = 0;
  std::uint8_t session_counter = 0;
  friend auto operator<=>(const CounterPair&, const CounterPair&) = default;
};

struct TokenRecord {
  std::string serial;
  token::HsmHandle otp_secret_handle;
  std::optional<CounterPair> last_counters;
  std::optional<std::string> bound_channel;
  TokenStatus status = TokenStatus::Active;
};

struct SecureChannel {
  std::string sec_id;
  // Distinguishes successive channels that reuse one secID label.
  std::uint64_t instance = 0;
  mgmt::ChannelKey key;
  std::uint32_t key_version = 0;
  std::set<std::string> tokens;
  // gatewayId -> data-plane sender index.
  std::map<std::string, std::uint32_t> members;
  std::uint32_t next_sender_index = 1;
};

struct RetiredChannel {
  std::string sec_id;
  std::uint64_t instance = 0;
  std::uint32_t final_key_version = 0;
  std::uint64_t retired_at = 0;
};

enum class Action {
  Join,
  Leave,
  DecommissionGateway,
  DecommissionToken,
  Revert,
  TokenEvent,  // a token event that was rejected before a decision
  OfflineAlarm,
  Online,
};
std::string_view to_string(Action a);
Action action_from(std::string_view s);

inline constexpr std::string_view kOutcomeOk = "ok";
inline constexpr std::string_view kOperatorActor = "operator";
inline constexpr std::string_view kSystemActor = "system";

struct ConfigEvent {
  std::uint64_t event_id = 0;
  std::uint64_t time = 0;
  std::string actor;
  std::string gateway_id;
  // Token involved: the pressed token, or the subject of decommission-token.
  std::string token_serial;
  Action action = Action::Join;
  std::string sec_id;
  std::string outcome{kOutcomeOk};
  std::uint64_t channel_instance = 0;
  // Revert events: the reverted event and the membership effect applied.
  std::optional<std::uint64_t> reverts;
  std::optional<Action> effect;
  // decommission-token: whether the bound channel was torn down.
  bool teardown = false;

  bool ok() const { return outcome == kOutcomeOk; }
  friend bool operator==(const ConfigEvent&, const ConfigEvent&) = default;
};

struct Outbound {
  std::string gateway_id;
  mgmt::MessageBody body;
};

struct ServerIdentity {
  crypto::DhKeyPair static_key;
  std::string mgmt_address;
};

}  // namespace tokengate::registry
