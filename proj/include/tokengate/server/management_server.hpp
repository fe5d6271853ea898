#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tokengate/mgmt/session.hpp"
#include "tokengate/registry/registry.hpp"

namespace tokengate::server {

using ConnectionId = std::uint64_t;

struct Delivery {
  ConnectionId connection = 0;
  Bytes body;
};

// Server side of the management plane. Owns one Session per connection and
// feeds authenticated messages into the registry. It never touches sockets:
// callers hand in received bodies and ship the returned deliveries, which
// keeps the simulator and socket mode on the same code path.
class ManagementServer {
 public:
  ManagementServer(registry::Registry& registry, RandomSource& rng);

  std::vector<Delivery> receive(std::uint64_t now, ConnectionId from, ByteView body);
  // Runs the liveness check and delivers queued registry messages.
  std::vector<Delivery> tick(std::uint64_t now);
  // Delivers queued registry messages (call after operator commands).
  std::vector<Delivery> flush();
  void disconnect(ConnectionId connection);

  std::optional<std::string> gateway_on(ConnectionId connection) const;
  std::optional<ConnectionId> connection_of(const std::string& gateway_id) const;
  // Dropped inbound bodies by error code name.
  const std::map<std::string, std::uint64_t>& rejections() const { return rejections_; }
  std::uint64_t rejected_total() const;

 private:
  struct Peer {
    std::string gateway_id;
    mgmt::Session session;
  };

  std::vector<Delivery> on_handshake(std::uint64_t now, ConnectionId from, ByteView body,
                                     std::uint32_t sender_id);
  std::vector<Delivery> on_message(std::uint64_t now, ConnectionId from, Peer& peer,
                                   const mgmt::ManagementMessage& msg);
  void deliver(std::vector<Delivery>& out, const registry::Outbound& message);
  void count(Errc code);
  void drop_decommissioned();

  registry::Registry* registry_;
  RandomSource* rng_;
  std::map<ConnectionId, Peer> peers_;
  std::map<std::string, ConnectionId> by_gateway_;
  // Teardowns for gateways that were unreachable when they were issued.
  std::map<std::string, std::vector<mgmt::MessageBody>> pending_;
  std::uint32_t next_session_id_ = 1;
  std::map<std::string, std::uint64_t> rejections_;
};

}  // namespace tokengate::server
