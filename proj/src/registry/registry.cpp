#include "tokengate/registry/registry.hpp"

#include <algorithm>

#include "tokengate/common/error.hpp"

namespace tokengate::registry {

std::string_view to_string(GatewayStatus s) {
  switch (s) {
    case GatewayStatus::Provisioned: return "provisioned";
    case GatewayStatus::Online: return "online";
    case GatewayStatus::Offline: return "offline";
    case GatewayStatus::Decommissioned: return "decommissioned";
  }
  return "unknown";
}

GatewayStatus gateway_status_from(std::string_view s) {
  for (auto st : {GatewayStatus::Provisioned, GatewayStatus::Online, GatewayStatus::Offline,
                  GatewayStatus::Decommissioned}) {
    if (to_string(st) == s) return st;
  }
  throw Error(Errc::CorruptSnapshot, "unknown gateway status");
}

std::string_view to_string(TokenStatus s) {
  return s == TokenStatus::Active ? "active" : "decommissioned";
}

std::string_view to_string(Action a) {
  switch (a) {
    case Action::Join: return "join";
    case Action::Leave: return "leave";
    case Action::DecommissionGateway: return "decommission-gw";
    case Action::DecommissionToken: return "decommission-token";
    case Action::Revert: return "revert";
    case Action::TokenEvent: return "token-event";
    case Action::OfflineAlarm: return "offline-alarm";
    case Action::Online: return "online";
  }
  return "unknown";
}

Action action_from(std::string_view s) {
  for (auto a : {Action::Join, Action::Leave, Action::DecommissionGateway, Action::DecommissionToken,
                 Action::Revert, Action::TokenEvent, Action::OfflineAlarm, Action::Online}) {
    if (to_string(a) == s) return a;
  }
  throw Error(Errc::CorruptSnapshot, "unknown action " + std::string(s));
}

Registry::Registry(ServerIdentity identity, token::HsmStore& hsm, RandomSource& rng,
                   RegistryOptions options)
    : identity_(std::move(identity)), hsm_(&hsm), rng_(&rng), options_(options) {}

ProvisioningReply Registry::provision_gateway(LinkKind via, const GatewayProvisioning& request) {
  if (via != LinkKind::Isolated) throw Error(Errc::NotIsolated, "gateway provisioning needs an isolated link");
  if (request.gateway_id.empty()) throw Error(Errc::Usage, "empty gateway id");
  if (gateways_.contains(request.gateway_id)) throw Error(Errc::DuplicateId, request.gateway_id);
  for (const auto& [id, gw] : gateways_) {
    if (gw.public_key == request.public_key) throw Error(Errc::DuplicateId, "public key already registered");
    if (gw.macsec_address == request.macsec_address) {
      throw Error(Errc::DuplicateId, "data-plane address " + request.macsec_address.to_string() + " in use");
    }
  }
  GatewayRecord rec;
  rec.gateway_id = request.gateway_id;
  rec.public_key = request.public_key;
  rec.mgmt_address = request.mgmt_address;
  rec.macsec_address = request.macsec_address;
  gateways_.emplace(rec.gateway_id, rec);
  return {identity_.static_key.pub, identity_.mgmt_address};
}

const TokenRecord& Registry::provision_token(LinkKind via, token::TokenDevice& device,
                                             const std::string& sec_id) {
  if (via != LinkKind::Isolated) throw Error(Errc::NotIsolated, "token provisioning needs an isolated link");
  if (sec_id.empty()) throw Error(Errc::Usage, "empty secID");
  if (auto it = tokens_.find(device.serial()); it != tokens_.end()) {
    if (it->second.status == TokenStatus::Decommissioned) {
      throw Error(Errc::TokenDecommissioned, "serial " + device.serial() + " was decommissioned");
    }
    throw Error(Errc::DuplicateSerial, device.serial());
  }
  otp::OtpSecret secret(rng_->bytes<16>());
  auto public_id = rng_->bytes<6>();
  auto private_id = rng_->bytes<6>();
  device.program(public_id, private_id, secret);

  TokenRecord rec;
  rec.serial = device.serial();
  rec.otp_secret_handle = hsm_->store(public_id, private_id, secret);
  secure_zero(private_id);
  rec.bound_channel = sec_id;
  auto ch = channels_.find(sec_id);
  SecureChannel& channel = ch != channels_.end() ? ch->second : create_channel(sec_id);
  channel.tokens.insert(rec.serial);
  return tokens_.emplace(rec.serial, std::move(rec)).first->second;
}

SecureChannel& Registry::create_channel(const std::string& sec_id) {
  SecureChannel channel;
  channel.sec_id = sec_id;
  channel.instance = next_channel_instance_++;
  channel.key = mgmt::ChannelKey(rng_->bytes<32>());
  channel.key_version = 1;
  return channels_.emplace(sec_id, std::move(channel)).first->second;
}

void Registry::rotate_key(SecureChannel& channel) {
  channel.key = mgmt::ChannelKey(rng_->bytes<32>());
  ++channel.key_version;
}

std::vector<mgmt::MemberInfo> Registry::member_infos(const SecureChannel& channel) const {
  std::vector<mgmt::MemberInfo> out;
  for (const auto& [gw, index] : channel.members) {
    out.push_back({gateways_.at(gw).macsec_address, index});
  }
  return out;
}

mgmt::ChannelConfigBody Registry::config_for(const SecureChannel& channel,
                                             const std::string& gateway_id) const {
  mgmt::ChannelConfigBody cfg;
  cfg.sec_id = channel.sec_id;
  cfg.key_version = channel.key_version;
  cfg.key = channel.key;
  cfg.own_sender_index = channel.members.at(gateway_id);
  cfg.members = member_infos(channel);
  return cfg;
}

void Registry::do_join(SecureChannel& channel, const std::string& gateway_id) {
  channel.members[gateway_id] = channel.next_sender_index++;
  outbox_.push_back({gateway_id, config_for(channel, gateway_id)});
  auto members = member_infos(channel);
  for (const auto& [gw, index] : channel.members) {
    if (gw == gateway_id) continue;
    outbox_.push_back({gw, mgmt::ChannelUpdateBody{channel.sec_id, channel.key_version, std::nullopt, members}});
  }
}

void Registry::do_leave(SecureChannel& channel, const std::string& gateway_id) {
  channel.members.erase(gateway_id);
  if (gateways_.at(gateway_id).status != GatewayStatus::Decommissioned) {
    outbox_.push_back({gateway_id, mgmt::ChannelTeardownBody{channel.sec_id}});
  }
  bool rotated = options_.rotate_on_shrink;
  if (rotated) rotate_key(channel);
  auto members = member_infos(channel);
  for (const auto& [gw, index] : channel.members) {
    mgmt::ChannelUpdateBody update{channel.sec_id, channel.key_version, std::nullopt, members};
    if (rotated) update.key = channel.key;
    outbox_.push_back({gw, std::move(update)});
  }
}

void Registry::retire_channel(std::uint64_t now, SecureChannel& channel) {
  for (const auto& [gw, index] : channel.members) {
    outbox_.push_back({gw, mgmt::ChannelTeardownBody{channel.sec_id}});
  }
  for (const auto& serial : channel.tokens) {
    auto& t = tokens_.at(serial);
    if (t.bound_channel == channel.sec_id) t.bound_channel.reset();
  }
  retired_.push_back({channel.sec_id, channel.instance, channel.key_version, now});
  auto sec_id = channel.sec_id;
  channel.key.wipe();
  channels_.erase(sec_id);
}

SecureChannel* Registry::channel_instance(const std::string& sec_id, std::uint64_t instance) {
  auto it = channels_.find(sec_id);
  if (it == channels_.end() || it->second.instance != instance) return nullptr;
  return &it->second;
}

SecureChannel* Registry::channel_containing(const std::string& gateway_id) {
  for (auto& [id, ch] : channels_) {
    if (ch.members.contains(gateway_id)) return &ch;
  }
  return nullptr;
}

std::optional<std::string> Registry::channel_of(const std::string& gateway_id) const {
  for (const auto& [id, ch] : channels_) {
    if (ch.members.contains(gateway_id)) return id;
  }
  return std::nullopt;
}

ConfigEvent& Registry::append(ConfigEvent event) {
  event.event_id = next_event_id_++;
  events_.push_back(std::move(event));
  if (sink_) sink_(events_.back());
  return events_.back();
}

void Registry::reject(std::uint64_t now, const std::string& actor, const std::string& gateway_id,
                      const std::string& sec_id, Errc code, const std::string& detail) {
  ConfigEvent ev;
  ev.time = now;
  ev.actor = actor;
  ev.token_serial = actor;
  ev.gateway_id = gateway_id;
  ev.action = Action::TokenEvent;
  ev.sec_id = sec_id;
  ev.outcome = std::string(to_string(code));
  append(std::move(ev));
  throw Error(code, detail);
}

TokenEventResult Registry::handle_token_event(std::uint64_t now, const std::string& gateway_id,
                                              const std::string& serial, const std::string& otp_text) {
  auto tok = tokens_.find(serial);
  if (tok == tokens_.end()) reject(now, serial, gateway_id, "", Errc::RejectUnknownToken, serial);
  TokenRecord& token = tok->second;
  std::string bound = token.bound_channel.value_or("");
  if (token.status == TokenStatus::Decommissioned) {
    reject(now, serial, gateway_id, bound, Errc::RejectDecommissionedToken, serial);
  }
  auto gw = gateways_.find(gateway_id);
  if (gw == gateways_.end() || gw->second.status == GatewayStatus::Decommissioned) {
    reject(now, serial, gateway_id, bound, Errc::RejectUnknownGateway, gateway_id);
  }

  otp::OtpPlain plain;
  try {
    plain = hsm_->verify(token.otp_secret_handle, otp::OtpString::parse(otp_text));
  } catch (const Error& e) {
    reject(now, serial, gateway_id, bound, Errc::RejectBadOtp, std::string(to_string(e.code())));
  }
  CounterPair counters{plain.use_counter, plain.session_counter};
  if (token.last_counters && counters <= *token.last_counters) {
    reject(now, serial, gateway_id, bound, Errc::RejectReplay, "OTP counters not increasing");
  }
  token.last_counters = counters;

  if (!token.bound_channel) reject(now, serial, gateway_id, "", Errc::RejectUnboundToken, serial);
  SecureChannel& channel = channels_.at(*token.bound_channel);

  ConfigEvent ev;
  ev.time = now;
  ev.actor = serial;
  ev.token_serial = serial;
  ev.gateway_id = gateway_id;
  ev.sec_id = channel.sec_id;
  ev.channel_instance = channel.instance;
  ChannelDecision decision;
  if (channel.members.contains(gateway_id)) {
    do_leave(channel, gateway_id);
    ev.action = Action::Leave;
    decision = ChannelDecision::Leave;
  } else {
    if (auto* other = channel_containing(gateway_id)) {
      reject(now, serial, gateway_id, channel.sec_id, Errc::RejectChannelConflict,
             gateway_id + " is a member of " + other->sec_id);
    }
    do_join(channel, gateway_id);
    ev.action = Action::Join;
    decision = ChannelDecision::Join;
  }
  auto id = append(std::move(ev)).event_id;
  return {decision, channel.sec_id, id};
}

std::uint64_t Registry::remove_gateway_from_channel(std::uint64_t now, const std::string& actor,
                                                    const std::string& gateway_id,
                                                    const std::string& sec_id) {
  auto it = channels_.find(sec_id);
  if (it == channels_.end()) throw Error(Errc::UnknownChannel, sec_id);
  if (!it->second.members.contains(gateway_id)) throw Error(Errc::NotAMember, gateway_id);
  do_leave(it->second, gateway_id);
  ConfigEvent ev;
  ev.time = now;
  ev.actor = actor;
  ev.gateway_id = gateway_id;
  ev.action = Action::Leave;
  ev.sec_id = sec_id;
  ev.channel_instance = it->second.instance;
  return append(std::move(ev)).event_id;
}

void Registry::decommission_gateway(std::uint64_t now, const std::string& actor,
                                    const std::string& gateway_id) {
  auto it = gateways_.find(gateway_id);
  if (it == gateways_.end()) throw Error(Errc::UnknownGateway, gateway_id);
  if (it->second.status == GatewayStatus::Decommissioned) return;
  it->second.status = GatewayStatus::Decommissioned;
  ConfigEvent ev;
  ev.time = now;
  ev.actor = actor;
  ev.gateway_id = gateway_id;
  ev.action = Action::DecommissionGateway;
  if (auto* channel = channel_containing(gateway_id)) {
    ev.sec_id = channel->sec_id;
    ev.channel_instance = channel->instance;
    do_leave(*channel, gateway_id);
  }
  // Nothing further is sent to a decommissioned gateway.
  std::erase_if(outbox_, [&](const Outbound& o) { return o.gateway_id == gateway_id; });
  append(std::move(ev));
}

void Registry::decommission_token(std::uint64_t now, const std::string& actor,
                                  const std::string& serial, bool tear_down_channel) {
  auto it = tokens_.find(serial);
  if (it == tokens_.end()) throw Error(Errc::UnknownToken, serial);
  TokenRecord& token = it->second;
  if (token.status == TokenStatus::Decommissioned) return;
  ConfigEvent ev;
  ev.time = now;
  ev.actor = actor;
  ev.token_serial = serial;
  ev.action = Action::DecommissionToken;
  ev.teardown = tear_down_channel;
  auto bound = token.bound_channel;
  token.status = TokenStatus::Decommissioned;
  token.bound_channel.reset();
  hsm_->erase(token.otp_secret_handle);
  if (bound) {
    auto& channel = channels_.at(*bound);
    ev.sec_id = channel.sec_id;
    ev.channel_instance = channel.instance;
    channel.tokens.erase(serial);
    if (tear_down_channel) retire_channel(now, channel);
  }
  append(std::move(ev));
}

std::uint64_t Registry::revert_event(std::uint64_t now, const std::string& actor, std::uint64_t event_id) {
  auto it = std::find_if(events_.begin(), events_.end(),
                         [&](const ConfigEvent& e) { return e.event_id == event_id; });
  if (it == events_.end()) throw Error(Errc::UnknownEvent, std::to_string(event_id));
  const ConfigEvent target = *it;
  if (!target.ok()) throw Error(Errc::NotRevertible, "event was rejected");
  Action effect;
  if (target.action == Action::Join || target.action == Action::Leave) {
    effect = target.action;
  } else if (target.action == Action::Revert && target.effect) {
    effect = *target.effect;
  } else {
    throw Error(Errc::NotRevertible, "only membership changes can be reverted");
  }
  auto gw = gateways_.find(target.gateway_id);
  if (gw == gateways_.end() || gw->second.status == GatewayStatus::Decommissioned) {
    throw Error(Errc::NotRevertible, "gateway " + target.gateway_id + " is decommissioned");
  }
  SecureChannel* channel = channel_instance(target.sec_id, target.channel_instance);
  if (!channel) throw Error(Errc::NotRevertible, "channel " + target.sec_id + " was retired");

  Action inverse = effect == Action::Join ? Action::Leave : Action::Join;
  if (inverse == Action::Leave) {
    if (!channel->members.contains(target.gateway_id)) {
      throw Error(Errc::NotRevertible, target.gateway_id + " is no longer a member");
    }
    do_leave(*channel, target.gateway_id);
  } else {
    if (auto* current = channel_containing(target.gateway_id)) {
      throw Error(Errc::NotRevertible, target.gateway_id + " is a member of " + current->sec_id);
    }
    do_join(*channel, target.gateway_id);
  }
  ConfigEvent ev;
  ev.time = now;
  ev.actor = actor;
  ev.gateway_id = target.gateway_id;
  ev.action = Action::Revert;
  ev.sec_id = channel->sec_id;
  ev.channel_instance = channel->instance;
  ev.reverts = event_id;
  ev.effect = inverse;
  return append(std::move(ev)).event_id;
}

void Registry::session_established(std::uint64_t now, const std::string& gateway_id) {
  auto& gw = gateways_.at(gateway_id);
  if (gw.status == GatewayStatus::Decommissioned) return;
  bool was_offline = gw.status == GatewayStatus::Offline;
  gw.status = GatewayStatus::Online;
  gw.last_heartbeat = now;
  if (was_offline) {
    ConfigEvent ev;
    ev.time = now;
    ev.actor = std::string(kSystemActor);
    ev.gateway_id = gateway_id;
    ev.action = Action::Online;
    append(std::move(ev));
  }
}

void Registry::record_heartbeat(std::uint64_t now, const std::string& gateway_id) {
  session_established(now, gateway_id);
}

std::vector<std::string> Registry::liveness_check(std::uint64_t now, std::uint64_t threshold) {
  std::vector<std::string> offline;
  for (auto& [id, gw] : gateways_) {
    if (gw.status != GatewayStatus::Online) continue;
    if (now < gw.last_heartbeat || now - gw.last_heartbeat < threshold) continue;
    gw.status = GatewayStatus::Offline;
    offline.push_back(id);
    ConfigEvent ev;
    ev.time = now;
    ev.actor = std::string(kSystemActor);
    ev.gateway_id = id;
    ev.action = Action::OfflineAlarm;
    ev.sec_id = channel_of(id).value_or("");
    append(std::move(ev));
  }
  return offline;
}

void Registry::accept_handshake_counter(const std::string& gateway_id, std::uint64_t counter) {
  auto& gw = gateways_.at(gateway_id);
  if (counter <= gw.last_handshake_counter) throw Error(Errc::HandshakeReplay, gateway_id);
  gw.last_handshake_counter = counter;
}

std::vector<Outbound> Registry::take_outbox() {
  std::vector<Outbound> out;
  out.swap(outbox_);
  return out;
}

std::vector<Outbound> Registry::resync_messages(const std::string& gateway_id) const {
  std::vector<Outbound> out;
  for (const auto& [id, ch] : channels_) {
    if (ch.members.contains(gateway_id)) out.push_back({gateway_id, config_for(ch, gateway_id)});
  }
  return out;
}

const GatewayRecord* Registry::find_gateway(const std::string& id) const {
  auto it = gateways_.find(id);
  return it == gateways_.end() ? nullptr : &it->second;
}

const GatewayRecord* Registry::find_gateway_by_key(const crypto::DhPublic& key) const {
  for (const auto& [id, gw] : gateways_) {
    if (gw.public_key == key) return &gw;
  }
  return nullptr;
}

}  // namespace tokengate::registry
