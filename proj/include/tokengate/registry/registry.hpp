#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tokengate/common/random.hpp"
#include "tokengate/registry/types.hpp"
#include "tokengate/token/hsm_store.hpp"
#include "tokengate/token/token_device.hpp"

namespace tokengate::registry {

struct RegistryOptions {
  // Rotate the channel key whenever the member set shrinks.
  bool rotate_on_shrink = true;
};

struct GatewayProvisioning {
  std::string gateway_id;
  crypto::DhPublic public_key{};
  std::string mgmt_address;
  MacAddress macsec_address;
};

// What a freshly provisioned gateway learns from the server.
struct ProvisioningReply {
  crypto::DhPublic server_public_key{};
  std::string server_mgmt_address;
};

enum class ChannelDecision { Join, Leave };

struct TokenEventResult {
  ChannelDecision decision;
  std::string sec_id;
  std::uint64_t event_id;
};

// Authoritative management-server state. All mutations go through this
// object from a single writer; each mutating call appends ConfigEvents and
// queues the management messages the affected gateways must receive.
class Registry {
 public:
  Registry(ServerIdentity identity, token::HsmStore& hsm, RandomSource& rng,
           RegistryOptions options = {});

  const ServerIdentity& identity() const { return identity_; }
  const RegistryOptions& options() const { return options_; }

  // Throws Error{NotIsolated} or Error{DuplicateId}.
  ProvisioningReply provision_gateway(LinkKind via, const GatewayProvisioning& request);

  // Programs the device with a fresh OTP secret, hands the secret to the HSM
  // and binds the serial to sec_id, creating the channel when the label is
  // not in use. Throws Error{NotIsolated}, Error{DuplicateSerial} or
  // Error{TokenDecommissioned}.
  const TokenRecord& provision_token(LinkKind via, token::TokenDevice& device,
                                     const std::string& sec_id);

  // Validates the (serial, OTP) pair reported by gateway_id and toggles that
  // gateway's membership in the token's channel. Rejections are logged and
  // thrown as Error{Reject*}.
  TokenEventResult handle_token_event(std::uint64_t now, const std::string& gateway_id,
                                      const std::string& serial, const std::string& otp);

  // Throws Error{UnknownChannel} or Error{NotAMember}.
  std::uint64_t remove_gateway_from_channel(std::uint64_t now, const std::string& actor,
                                            const std::string& gateway_id,
                                            const std::string& sec_id);
  // Idempotent. Throws Error{UnknownGateway}.
  void decommission_gateway(std::uint64_t now, const std::string& actor,
                            const std::string& gateway_id);
  // Idempotent. Throws Error{UnknownToken}.
  void decommission_token(std::uint64_t now, const std::string& actor, const std::string& serial,
                          bool tear_down_channel);
  // Throws Error{UnknownEvent} or Error{NotRevertible}.
  std::uint64_t revert_event(std::uint64_t now, const std::string& actor, std::uint64_t event_id);

  // Liveness bookkeeping driven by the management server.
  void session_established(std::uint64_t now, const std::string& gateway_id);
  void record_heartbeat(std::uint64_t now, const std::string& gateway_id);
  // Marks stale gateways offline (now - lastHeartbeat >= threshold) and
  // returns the ids that just went offline.
  std::vector<std::string> liveness_check(std::uint64_t now, std::uint64_t threshold);
  // Throws Error{HandshakeReplay} unless counter is fresh; records it.
  void accept_handshake_counter(const std::string& gateway_id, std::uint64_t counter);

  // Messages queued for delivery, in emission order.
  std::vector<Outbound> take_outbox();
  // State a (re)connecting gateway must converge to.
  std::vector<Outbound> resync_messages(const std::string& gateway_id) const;

  const std::map<std::string, GatewayRecord>& gateways() const { return gateways_; }
  const std::map<std::string, TokenRecord>& tokens() const { return tokens_; }
  const std::map<std::string, SecureChannel>& channels() const { return channels_; }
  const std::vector<RetiredChannel>& retired_channels() const { return retired_; }
  const std::vector<ConfigEvent>& events() const { return events_; }
  const GatewayRecord* find_gateway(const std::string& id) const;
  const GatewayRecord* find_gateway_by_key(const crypto::DhPublic& key) const;
  std::optional<std::string> channel_of(const std::string& gateway_id) const;

  // Receives every appended event (event-log file, live stream).
  void set_event_sink(std::function<void(const ConfigEvent&)> sink) { sink_ = std::move(sink); }

  // Versioned JSON document. Key material is stored only as HSM-wrapped
  // blobs; OTP secrets are not present at all.
  nlohmann::json snapshot() const;
  // Throws Error{CorruptSnapshot}.
  static Registry restore(const nlohmann::json& document, token::HsmStore& hsm, RandomSource& rng,
                          RegistryOptions options = {});

 private:
  ConfigEvent& append(ConfigEvent event);
  [[noreturn]] void reject(std::uint64_t now, const std::string& actor, const std::string& gateway_id,
                           const std::string& sec_id, Errc code, const std::string& detail = {});

  SecureChannel& create_channel(const std::string& sec_id);
  void rotate_key(SecureChannel& channel);
  std::vector<mgmt::MemberInfo> member_infos(const SecureChannel& channel) const;
  mgmt::ChannelConfigBody config_for(const SecureChannel& channel, const std::string& gateway_id) const;
  void do_join(SecureChannel& channel, const std::string& gateway_id);
  void do_leave(SecureChannel& channel, const std::string& gateway_id);
  void retire_channel(std::uint64_t now, SecureChannel& channel);
  SecureChannel* channel_instance(const std::string& sec_id, std::uint64_t instance);
  SecureChannel* channel_containing(const std::string& gateway_id);

  ServerIdentity identity_;
  token::HsmStore* hsm_;
  RandomSource* rng_;
  RegistryOptions options_;

  std::map<std::string, GatewayRecord> gateways_;
  std::map<std::string, TokenRecord> tokens_;
  std::map<std::string, SecureChannel> channels_;
  std::vector<RetiredChannel> retired_;
  std::vector<ConfigEvent> events_;
  std::uint64_t next_event_id_ = 1;
  std::uint64_t next_channel_instance_ = 1;
  std::vector<Outbound> outbox_;
  std::function<void(const ConfigEvent&)> sink_;
};

// JSON forms shared by the snapshot, the event log and the HTTP API.
nlohmann::json to_json(const ConfigEvent& event);
ConfigEvent event_from_json(const nlohmann::json& j);

}  // namespace tokengate::registry
