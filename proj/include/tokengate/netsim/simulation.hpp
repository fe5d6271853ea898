#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "tokengate/dataplane/frame.hpp"
#include "tokengate/gateway/agent.hpp"
#include "tokengate/registry/registry.hpp"
#include "tokengate/server/management_server.hpp"

namespace tokengate::netsim {

using registry::LinkKind;
using LinkId = std::uint32_t;

inline constexpr std::string_view kServerNode = "server";
inline constexpr std::string_view kSwitchNode = "switch";
inline constexpr std::string_view kRogueNode = "rogue";

struct SimOptions {
  std::uint64_t seed = 1;
  // Per-hop delivery latency in ticks.
  std::uint64_t latency = 1;
  // Robustness testing only; the default adversary cannot drop traffic.
  bool adversary_can_drop = false;
  registry::RegistryOptions registry;
};

struct Link {
  LinkId id = 0;
  std::string name;
  LinkKind kind = LinkKind::Insecure;
  std::string a;
  std::string b;
  std::uint64_t latency = 1;
};

struct CapturedFrame {
  std::uint64_t time = 0;
  LinkId link = 0;
  std::string from;
  std::string to;
  Bytes bytes;
};

struct HarmWindow {
  std::string serial;
  std::uint64_t stolen_at = 0;
  std::optional<std::uint64_t> first_use;
  // Time the serial was decommissioned, if it was.
  std::optional<std::uint64_t> contained_at;
};

// Deterministic discrete-event network. Every gateway gets an insecure
// management link to the server ("mgmt:<id>"), an insecure data link to the
// switch ("data:<id>") and an isolated link to its endpoint ("lan:<id>").
// Provisioning is an instantaneous exchange over the isolated provisioning
// port. Time advances only through advance().
class Simulation {
 public:
  explicit Simulation(SimOptions options = {});
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;
  ~Simulation();

  std::uint64_t now() const { return now_; }
  const SimOptions& options() const { return options_; }

  // Provisions, deploys and connects a gateway. Throws Error{NotIsolated} or
  // Error{DuplicateId}.
  void provision_gateway(const std::string& id, LinkKind via = LinkKind::Isolated,
                         std::optional<MacAddress> macsec_address = std::nullopt);
  void provision_token(const std::string& serial, const std::string& sec_id,
                       LinkKind via = LinkKind::Isolated);
  void plug(const std::string& serial, const std::string& gateway_id);
  void unplug(const std::string& serial);
  // Throws Error{NoToken} or Error{NoSession}.
  void press(const std::string& gateway_id);
  // The endpoint behind `from` sends a frame to the endpoint behind `to`
  // (or to everyone when `to` is empty).
  void send(const std::string& from, const std::string& to, ByteView payload,
            std::uint16_t ether_type = 0x0800);
  void advance(std::uint64_t ticks);
  // Cuts the gateway's management link in both directions.
  void silence(const std::string& gateway_id);
  // Restores the link and reconnects.
  void resume(const std::string& gateway_id);
  // New handshake from the gateway.
  void reconnect(const std::string& gateway_id);

  // Operator commands.
  std::uint64_t remove(const std::string& sec_id, const std::string& gateway_id);
  void decommission_gateway(const std::string& gateway_id);
  void decommission_token(const std::string& serial, bool tear_down_channel);
  std::uint64_t revert(std::uint64_t event_id);
  // Delivers whatever an out-of-band registry mutation (e.g. the HTTP API)
  // queued for the gateways.
  void flush_server();

  // Adversary. Capture, inject and replay work on insecure links only and
  // throw Error{IsolatedLink} otherwise.
  std::vector<Bytes> adversary_capture(const std::string& link) const;
  void adversary_inject(const std::string& link, const std::string& to, ByteView bytes);
  // Re-sends the index-th captured frame of the link to its original
  // receiver.
  void adversary_replay(const std::string& link, std::size_t index);
  // Throws Error{TokenNotPresent} unless the token is unplugged.
  void adversary_steal_token(const std::string& serial);
  // Plugs a held token into gateway_id (kRogueNode for the attacker's own
  // box) and presses it. Throws Error{TokenNotPresent}; press errors
  // propagate.
  void adversary_use_token(const std::string& serial, const std::string& gateway_id);
  // Throws Error{Usage} unless adversary_can_drop.
  void adversary_drop(const std::string& link, std::size_t count);
  bool adversary_holds(const std::string& serial) const { return stolen_.contains(serial); }

  registry::Registry& registry() { return *registry_; }
  const registry::Registry& registry() const { return *registry_; }
  server::ManagementServer& server() { return *server_; }
  token::HsmStore& hsm() { return *hsm_; }
  token::TokenInventory& tokens() { return tokens_; }
  gateway::GatewayAgent& gateway(const std::string& id);
  const gateway::GatewayAgent& gateway(const std::string& id) const;
  const gateway::GatewayAgent* rogue() const { return rogue_.get(); }
  std::vector<std::string> gateway_ids() const;
  MacAddress endpoint_address(const std::string& gateway_id) const;
  // Frames delivered to the endpoint behind gateway_id (addressed to it or
  // broadcast).
  const std::vector<dataplane::Frame>& endpoint_inbox(const std::string& gateway_id) const;

  const Link& link(const std::string& name) const;
  const std::vector<Link>& links() const { return links_; }
  const std::vector<CapturedFrame>& captures() const { return captures_; }

  // JSON-lines, one ConfigEvent per line.
  const std::string& event_log() const { return event_log_; }
  // Called after each event is appended to event_log().
  void set_event_observer(std::function<void(const registry::ConfigEvent&)> observer) {
    observer_ = std::move(observer);
  }
  // JSON-lines, one captured insecure-link frame per line.
  std::string capture_log() const;
  std::vector<HarmWindow> harm_windows() const;

  // Everything that must never appear on the wire or at rest: every OTP
  // secret and every channel key the registry ever issued.
  std::vector<Bytes> audit_secrets() const;

 private:
  struct GatewayNode {
    std::unique_ptr<gateway::GatewayAgent> agent;
    MacAddress endpoint;
    std::vector<dataplane::Frame> inbox;
    LinkId mgmt = 0;
    LinkId data = 0;
    LinkId lan = 0;
    bool silenced = false;
  };
  struct Pending {
    std::uint64_t time;
    LinkId link;
    std::uint64_t seq;
    std::string to;
    Bytes bytes;
    friend bool operator<(const Pending& x, const Pending& y) {
      return std::tie(x.time, x.link, x.seq) < std::tie(y.time, y.link, y.seq);
    }
  };

  LinkId add_link(std::string name, LinkKind kind, std::string a, std::string b);
  void transmit(LinkId link, const std::string& from, Bytes bytes);
  void enqueue(LinkId link, const std::string& to, Bytes bytes);
  void deliver(const Pending& p);
  void deliver_to_gateway(GatewayNode& node, const Link& link, const Bytes& bytes);
  void route_switch(const Link& from, const Bytes& bytes);
  void ship(const std::vector<server::Delivery>& deliveries);
  void run_due();
  void record_keys();
  GatewayNode& node(const std::string& id);
  std::string other_end(const Link& link, const std::string& node) const;
  void ensure_rogue();

  SimOptions options_;
  std::uint64_t now_ = 0;
  std::uint64_t seq_ = 0;
  DeterministicRandom rng_;
  std::unique_ptr<token::HsmStore> hsm_;
  std::unique_ptr<registry::Registry> registry_;
  std::unique_ptr<server::ManagementServer> server_;
  token::TokenInventory tokens_;
  std::map<std::string, GatewayNode> gateways_;
  std::unique_ptr<gateway::GatewayAgent> rogue_;
  LinkId rogue_link_ = 0;
  std::vector<Link> links_;
  std::map<std::string, LinkId> link_by_name_;
  std::set<Pending> queue_;
  std::vector<CapturedFrame> captures_;
  std::map<LinkId, std::size_t> drops_;
  std::map<std::string, std::uint64_t> stolen_;
  std::string event_log_;
  std::function<void(const registry::ConfigEvent&)> observer_;
  std::vector<mgmt::ChannelKey> key_history_;
  std::uint8_t next_mac_ = 1;
};

}  // namespace tokengate::netsim
