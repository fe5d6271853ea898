#include "tokengate/server/management_server.hpp"

#include "tokengate/common/error.hpp"
#include "tokengate/mgmt/wire.hpp"

namespace tokengate::server {

using registry::GatewayStatus;

ManagementServer::ManagementServer(registry::Registry& registry, RandomSource& rng)
    : registry_(&registry), rng_(&rng) {}

void ManagementServer::count(Errc code) { ++rejections_[std::string(to_string(code))]; }

std::uint64_t ManagementServer::rejected_total() const {
  std::uint64_t n = 0;
  for (const auto& [code, c] : rejections_) n += c;
  return n;
}

std::optional<std::string> ManagementServer::gateway_on(ConnectionId connection) const {
  auto it = peers_.find(connection);
  if (it == peers_.end()) return std::nullopt;
  return it->second.gateway_id;
}

std::optional<ConnectionId> ManagementServer::connection_of(const std::string& gateway_id) const {
  auto it = by_gateway_.find(gateway_id);
  if (it == by_gateway_.end()) return std::nullopt;
  return it->second;
}

void ManagementServer::disconnect(ConnectionId connection) {
  auto it = peers_.find(connection);
  if (it == peers_.end()) return;
  auto gw = by_gateway_.find(it->second.gateway_id);
  if (gw != by_gateway_.end() && gw->second == connection) by_gateway_.erase(gw);
  it->second.session.close();
  peers_.erase(it);
}

std::vector<Delivery> ManagementServer::receive(std::uint64_t now, ConnectionId from, ByteView body) {
  mgmt::wire::Header header;
  try {
    header = mgmt::wire::peek_header(body);
  } catch (const Error& e) {
    count(e.code());
    return {};
  }
  if (header.kind == mgmt::wire::kHandshakeInit) return on_handshake(now, from, body, header.session_id);

  auto it = peers_.find(from);
  if (it == peers_.end()) {
    count(Errc::SessionClosed);
    return {};
  }
  mgmt::ManagementMessage msg;
  try {
    msg = it->second.session.open(body);
  } catch (const Error& e) {
    count(e.code());
    return {};
  }
  return on_message(now, from, it->second, msg);
}

std::vector<Delivery> ManagementServer::on_handshake(std::uint64_t now, ConnectionId from, ByteView body,
                                                     std::uint32_t sender_id) {
  std::string gateway_id;
  auto authorize = [&](const crypto::DhPublic& key, std::uint64_t counter) {
    const auto* gw = registry_->find_gateway_by_key(key);
    if (gw == nullptr) throw Error(Errc::AuthFail, "unknown static key");
    if (gw->status == GatewayStatus::Decommissioned) throw Error(Errc::DecommissionedPeer, gw->gateway_id);
    registry_->accept_handshake_counter(gw->gateway_id, counter);
    gateway_id = gw->gateway_id;
  };

  std::optional<mgmt::AcceptedHandshake> accepted;
  try {
    accepted.emplace(mgmt::accept_handshake(registry_->identity().static_key, body, next_session_id_, *rng_,
                                            authorize));
  } catch (const Error& e) {
    count(e.code());
    if (e.code() == Errc::MalformedMessage) return {};
    return {{from, mgmt::handshake_reject(sender_id, to_string(e.code()))}};
  }
  ++next_session_id_;

  if (auto old = by_gateway_.find(gateway_id); old != by_gateway_.end()) disconnect(old->second);
  disconnect(from);
  peers_.emplace(from, Peer{gateway_id, std::move(accepted->session)});
  by_gateway_[gateway_id] = from;
  registry_->session_established(now, gateway_id);

  std::vector<Delivery> out;
  out.push_back({from, std::move(accepted->response)});
  auto pending = pending_.extract(gateway_id);
  if (!pending.empty()) {
    for (const auto& body : pending.mapped()) deliver(out, {gateway_id, body});
  }
  for (const auto& m : registry_->resync_messages(gateway_id)) deliver(out, m);
  auto rest = flush();
  out.insert(out.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
  return out;
}

std::vector<Delivery> ManagementServer::on_message(std::uint64_t now, ConnectionId from, Peer& peer,
                                                   const mgmt::ManagementMessage& msg) {
  std::vector<Delivery> out;
  const std::string gateway_id = peer.gateway_id;
  if (const auto* gw = registry_->find_gateway(gateway_id);
      gw == nullptr || gw->status == GatewayStatus::Decommissioned) {
    count(Errc::DecommissionedPeer);
    disconnect(from);
    return out;
  }

  if (const auto* ev = std::get_if<mgmt::TokenEventBody>(&msg.body)) {
    registry_->record_heartbeat(now, gateway_id);
    mgmt::MessageBody reply;
    try {
      registry_->handle_token_event(now, gateway_id, ev->serial, ev->otp);
      reply = mgmt::AckBody{msg.sequence};
    } catch (const Error& e) {
      reply = mgmt::ErrorBody{msg.sequence, std::string(to_string(e.code())), e.what()};
    }
    out.push_back({from, peer.session.seal(reply)});
    auto rest = flush();
    out.insert(out.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
    return out;
  }
  if (std::holds_alternative<mgmt::HeartbeatBody>(msg.body)) {
    registry_->record_heartbeat(now, gateway_id);
    return flush();
  }
  if (std::holds_alternative<mgmt::AckBody>(msg.body) || std::holds_alternative<mgmt::ErrorBody>(msg.body)) {
    return out;
  }
  out.push_back({from, peer.session.seal(mgmt::ErrorBody{msg.sequence, "MALFORMED_MESSAGE",
                                                         "configuration flows from the server"})});
  return out;
}

void ManagementServer::deliver(std::vector<Delivery>& out, const registry::Outbound& message) {
  auto conn = by_gateway_.find(message.gateway_id);
  if (conn == by_gateway_.end()) {
    // Configs are recomputed on reconnect; a teardown would otherwise be lost.
    if (std::holds_alternative<mgmt::ChannelTeardownBody>(message.body)) {
      pending_[message.gateway_id].push_back(message.body);
    }
    return;
  }
  auto& peer = peers_.at(conn->second);
  out.push_back({conn->second, peer.session.seal(message.body)});
}

void ManagementServer::drop_decommissioned() {
  std::vector<ConnectionId> doomed;
  for (const auto& [conn, peer] : peers_) {
    const auto* gw = registry_->find_gateway(peer.gateway_id);
    if (gw == nullptr || gw->status == GatewayStatus::Decommissioned) doomed.push_back(conn);
  }
  for (auto c : doomed) disconnect(c);
  for (auto it = pending_.begin(); it != pending_.end();) {
    const auto* gw = registry_->find_gateway(it->first);
    if (gw == nullptr || gw->status == GatewayStatus::Decommissioned) {
      it = pending_.erase(it);
    } else {
      ++it;
    }
  }
}

std::vector<Delivery> ManagementServer::flush() {
  std::vector<Delivery> out;
  for (const auto& m : registry_->take_outbox()) deliver(out, m);
  drop_decommissioned();
  return out;
}

std::vector<Delivery> ManagementServer::tick(std::uint64_t now) {
  registry_->liveness_check(now, mgmt::kOfflineThreshold);
  return flush();
}

}  // namespace tokengate::server
