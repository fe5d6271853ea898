#include "tokengate/netsim/simulation.hpp"

#include <algorithm>

#include "tokengate/common/error.hpp"

namespace tokengate::netsim {

namespace {

MacAddress mac_with(std::uint8_t group, std::uint8_t n) {
  MacAddress m;
  m.bytes = {0x02, 0x00, 0x00, 0x00, group, n};
  return m;
}

}  // namespace

Simulation::Simulation(SimOptions options) : options_(options), rng_(options.seed) {
  hsm_ = std::make_unique<token::HsmStore>(token::MasterKey(rng_.bytes<32>()));
  registry::ServerIdentity identity{crypto::dh_generate(rng_), "10.0.0.1"};
  registry_ = std::make_unique<registry::Registry>(std::move(identity), *hsm_, rng_, options_.registry);
  registry_->set_event_sink([this](const registry::ConfigEvent& ev) {
    event_log_ += registry::to_json(ev).dump();
    event_log_ += '\n';
    if (observer_) observer_(ev);
  });
  server_ = std::make_unique<server::ManagementServer>(*registry_, rng_);
}

Simulation::~Simulation() = default;

LinkId Simulation::add_link(std::string name, LinkKind kind, std::string a, std::string b) {
  Link l;
  l.id = static_cast<LinkId>(links_.size() + 1);
  l.name = std::move(name);
  l.kind = kind;
  l.a = std::move(a);
  l.b = std::move(b);
  l.latency = options_.latency;
  link_by_name_[l.name] = l.id;
  links_.push_back(std::move(l));
  return links_.back().id;
}

const Link& Simulation::link(const std::string& name) const {
  auto it = link_by_name_.find(name);
  if (it == link_by_name_.end()) throw Error(Errc::UnknownLink, name);
  return links_.at(it->second - 1);
}

std::string Simulation::other_end(const Link& l, const std::string& n) const { return l.a == n ? l.b : l.a; }

Simulation::GatewayNode& Simulation::node(const std::string& id) {
  auto it = gateways_.find(id);
  if (it == gateways_.end()) throw Error(Errc::UnknownNode, id);
  return it->second;
}

gateway::GatewayAgent& Simulation::gateway(const std::string& id) { return *node(id).agent; }

const gateway::GatewayAgent& Simulation::gateway(const std::string& id) const {
  auto it = gateways_.find(id);
  if (it == gateways_.end()) throw Error(Errc::UnknownNode, id);
  return *it->second.agent;
}

std::vector<std::string> Simulation::gateway_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, n] : gateways_) out.push_back(id);
  return out;
}

MacAddress Simulation::endpoint_address(const std::string& gateway_id) const {
  auto it = gateways_.find(gateway_id);
  if (it == gateways_.end()) throw Error(Errc::UnknownNode, gateway_id);
  return it->second.endpoint;
}

const std::vector<dataplane::Frame>& Simulation::endpoint_inbox(const std::string& gateway_id) const {
  auto it = gateways_.find(gateway_id);
  if (it == gateways_.end()) throw Error(Errc::UnknownNode, gateway_id);
  return it->second.inbox;
}

void Simulation::provision_gateway(const std::string& id, LinkKind via, std::optional<MacAddress> macsec_address) {
  if (id.empty() || id == kServerNode || id == kSwitchNode || id == kRogueNode || gateways_.contains(id)) {
    throw Error(Errc::DuplicateId, "node name " + id);
  }
  std::uint8_t n = next_mac_;
  auto keys = crypto::dh_generate(rng_);
  registry::GatewayProvisioning req{id, keys.pub, "10.0.1." + std::to_string(n),
                                    macsec_address.value_or(mac_with(0, n))};
  auto reply = registry_->provision_gateway(via, req);
  ++next_mac_;

  gateway::GatewayIdentity identity{id, std::move(keys), req.macsec_address, req.mgmt_address,
                                    reply.server_public_key, reply.server_mgmt_address};
  GatewayNode g;
  g.agent = std::make_unique<gateway::GatewayAgent>(std::move(identity), rng_);
  g.endpoint = mac_with(1, n);
  g.mgmt = add_link("mgmt:" + id, LinkKind::Insecure, id, std::string(kServerNode));
  g.data = add_link("data:" + id, LinkKind::Insecure, id, std::string(kSwitchNode));
  g.lan = add_link("lan:" + id, LinkKind::Isolated, "endpoint:" + id, id);
  auto& stored = gateways_.emplace(id, std::move(g)).first->second;
  transmit(stored.mgmt, id, stored.agent->connect(now_));
}

void Simulation::provision_token(const std::string& serial, const std::string& sec_id, LinkKind via) {
  auto* device = tokens_.find(serial);
  if (device == nullptr) device = &tokens_.create(serial, rng_);
  registry_->provision_token(via, *device, sec_id);
  record_keys();
}

void Simulation::plug(const std::string& serial, const std::string& gateway_id) {
  auto& device = tokens_.at(serial);
  if (stolen_.contains(serial)) throw Error(Errc::TokenNotPresent, serial + " is held by the adversary");
  node(gateway_id).agent->plug(device, now_);
}

void Simulation::unplug(const std::string& serial) {
  auto& device = tokens_.at(serial);
  if (!device.plugged()) return;
  const auto& host = *device.plugged_into();
  if (auto it = gateways_.find(host); it != gateways_.end()) {
    it->second.agent->unplug();
  } else if (host == kRogueNode && rogue_) {
    rogue_->unplug();
  } else {
    device.unplug();
  }
}

void Simulation::press(const std::string& gateway_id) {
  auto& g = node(gateway_id);
  for (auto& body : g.agent->on_button_press(now_)) transmit(g.mgmt, gateway_id, std::move(body));
}

void Simulation::send(const std::string& from, const std::string& to, ByteView payload, std::uint16_t ether_type) {
  auto& g = node(from);
  dataplane::Frame f;
  f.src = g.endpoint;
  f.dst = to.empty() ? MacAddress::broadcast() : endpoint_address(to);
  f.ether_type = ether_type;
  f.payload.assign(payload.begin(), payload.end());
  transmit(g.lan, "endpoint:" + from, f.serialize());
}

void Simulation::silence(const std::string& gateway_id) { node(gateway_id).silenced = true; }

void Simulation::resume(const std::string& gateway_id) {
  node(gateway_id).silenced = false;
  reconnect(gateway_id);
}

void Simulation::reconnect(const std::string& gateway_id) {
  auto& g = node(gateway_id);
  transmit(g.mgmt, gateway_id, g.agent->connect(now_));
}

std::uint64_t Simulation::remove(const std::string& sec_id, const std::string& gateway_id) {
  auto id = registry_->remove_gateway_from_channel(now_, std::string(registry::kOperatorActor), gateway_id, sec_id);
  flush_server();
  return id;
}

void Simulation::decommission_gateway(const std::string& gateway_id) {
  registry_->decommission_gateway(now_, std::string(registry::kOperatorActor), gateway_id);
  flush_server();
}

void Simulation::decommission_token(const std::string& serial, bool tear_down_channel) {
  registry_->decommission_token(now_, std::string(registry::kOperatorActor), serial, tear_down_channel);
  flush_server();
}

std::uint64_t Simulation::revert(std::uint64_t event_id) {
  auto id = registry_->revert_event(now_, std::string(registry::kOperatorActor), event_id);
  flush_server();
  return id;
}

void Simulation::flush_server() {
  record_keys();
  ship(server_->flush());
}

void Simulation::ship(const std::vector<server::Delivery>& deliveries) {
  for (const auto& d : deliveries) transmit(static_cast<LinkId>(d.connection), std::string(kServerNode), d.body);
}

void Simulation::transmit(LinkId id, const std::string& from, Bytes bytes) {
  const auto& l = links_.at(id - 1);
  if (auto it = gateways_.find(l.a); it != gateways_.end() && it->second.silenced && id == it->second.mgmt) return;
  auto to = other_end(l, from);
  if (l.kind == LinkKind::Insecure) captures_.push_back({now_, id, from, to, bytes});
  if (auto d = drops_.find(id); d != drops_.end() && d->second > 0) {
    --d->second;
    return;
  }
  enqueue(id, to, std::move(bytes));
}

void Simulation::enqueue(LinkId id, const std::string& to, Bytes bytes) {
  const auto& l = links_.at(id - 1);
  queue_.insert(Pending{now_ + l.latency, id, seq_++, to, std::move(bytes)});
}

void Simulation::deliver(const Pending& p) {
  const auto& l = links_.at(p.link - 1);
  if (p.to == kServerNode) {
    ship(server_->receive(now_, p.link, p.bytes));
    record_keys();
    return;
  }
  if (p.to == kSwitchNode) {
    route_switch(l, p.bytes);
    return;
  }
  if (p.to == kRogueNode) {
    if (rogue_) {
      for (auto& reply : rogue_->on_management(now_, p.bytes)) transmit(rogue_link_, std::string(kRogueNode), reply);
    }
    return;
  }
  if (p.to.starts_with("endpoint:")) {
    auto& g = node(p.to.substr(9));
    try {
      auto f = dataplane::Frame::parse(p.bytes);
      if (f.dst == g.endpoint || f.dst.is_broadcast()) g.inbox.push_back(std::move(f));
    } catch (const Error&) {
    }
    return;
  }
  deliver_to_gateway(node(p.to), l, p.bytes);
}

void Simulation::deliver_to_gateway(GatewayNode& g, const Link& l, const Bytes& bytes) {
  const auto& id = g.agent->id();
  if (l.id == g.mgmt) {
    if (g.silenced) return;
    for (auto& reply : g.agent->on_management(now_, bytes)) transmit(g.mgmt, id, std::move(reply));
  } else if (l.id == g.data) {
    if (auto out = g.agent->from_network(now_, bytes)) transmit(g.lan, id, std::move(*out));
  } else if (l.id == g.lan) {
    for (auto& out : g.agent->from_endpoint(now_, bytes)) transmit(g.data, id, std::move(out));
  }
}

void Simulation::route_switch(const Link& from, const Bytes& bytes) {
  if (bytes.size() < 6) return;
  MacAddress dst;
  std::copy_n(bytes.begin(), 6, dst.bytes.begin());
  std::vector<const GatewayNode*> targets;
  for (const auto& [id, g] : gateways_) {
    if (g.data == from.id) continue;
    if (dst == g.agent->identity().macsec_address || dst == g.endpoint) {
      targets.assign(1, &g);
      break;
    }
    targets.push_back(&g);
  }
  for (const auto* g : targets) transmit(g->data, std::string(kSwitchNode), bytes);
}

void Simulation::run_due() {
  while (!queue_.empty() && queue_.begin()->time <= now_) {
    auto p = queue_.extract(queue_.begin()).value();
    deliver(p);
  }
}

void Simulation::advance(std::uint64_t ticks) {
  for (std::uint64_t i = 0; i < ticks; ++i) {
    ++now_;
    run_due();
    for (auto& [id, g] : gateways_) {
      if (g.silenced) continue;
      for (auto& body : g.agent->tick(now_)) transmit(g.mgmt, id, std::move(body));
    }
    if (rogue_) rogue_->tick(now_);
    ship(server_->tick(now_));
    run_due();
  }
}

void Simulation::record_keys() {
  for (const auto& [sec, ch] : registry_->channels()) {
    bool seen = std::any_of(key_history_.begin(), key_history_.end(),
                            [&](const mgmt::ChannelKey& k) { return k == ch.key; });
    if (!seen) key_history_.push_back(ch.key);
  }
}

std::vector<Bytes> Simulation::audit_secrets() const {
  std::vector<Bytes> out;
  for (const auto& [serial, device] : tokens_.all()) {
    auto v = device.secret_for_audit().view();
    out.emplace_back(v.begin(), v.end());
  }
  for (const auto& k : key_history_) out.emplace_back(k.view().begin(), k.view().end());
  return out;
}

std::vector<Bytes> Simulation::adversary_capture(const std::string& name) const {
  const auto& l = link(name);
  if (l.kind == LinkKind::Isolated) throw Error(Errc::IsolatedLink, name);
  std::vector<Bytes> out;
  for (const auto& c : captures_) {
    if (c.link == l.id) out.push_back(c.bytes);
  }
  return out;
}

void Simulation::adversary_inject(const std::string& name, const std::string& to, ByteView bytes) {
  const auto& l = link(name);
  if (l.kind == LinkKind::Isolated) throw Error(Errc::IsolatedLink, name);
  if (to != l.a && to != l.b) throw Error(Errc::UnknownNode, to + " is not on " + name);
  enqueue(l.id, to, Bytes(bytes.begin(), bytes.end()));
}

void Simulation::adversary_replay(const std::string& name, std::size_t index) {
  const auto& l = link(name);
  if (l.kind == LinkKind::Isolated) throw Error(Errc::IsolatedLink, name);
  std::size_t seen = 0;
  for (const auto& c : captures_) {
    if (c.link != l.id) continue;
    if (seen++ == index) {
      enqueue(l.id, c.to, c.bytes);
      return;
    }
  }
  throw Error(Errc::Usage, "no capture #" + std::to_string(index) + " on " + name);
}

void Simulation::adversary_drop(const std::string& name, std::size_t count) {
  if (!options_.adversary_can_drop) throw Error(Errc::Usage, "drop capability disabled");
  const auto& l = link(name);
  if (l.kind == LinkKind::Isolated) throw Error(Errc::IsolatedLink, name);
  drops_[l.id] += count;
}

void Simulation::adversary_steal_token(const std::string& serial) {
  auto* device = tokens_.find(serial);
  if (device == nullptr || device->plugged() || stolen_.contains(serial)) {
    throw Error(Errc::TokenNotPresent, serial);
  }
  stolen_.emplace(serial, now_);
}

void Simulation::ensure_rogue() {
  if (rogue_) return;
  // Self-made keys; the server's public key is not secret.
  gateway::GatewayIdentity id{std::string(kRogueNode), crypto::dh_generate(rng_), mac_with(0xEE, 1),
                              "10.0.9.9", registry_->identity().static_key.pub,
                              registry_->identity().mgmt_address};
  rogue_ = std::make_unique<gateway::GatewayAgent>(std::move(id), rng_);
  rogue_link_ = add_link("mgmt:rogue", LinkKind::Insecure, std::string(kRogueNode), std::string(kServerNode));
  transmit(rogue_link_, std::string(kRogueNode), rogue_->connect(now_));
}

void Simulation::adversary_use_token(const std::string& serial, const std::string& gateway_id) {
  if (!stolen_.contains(serial)) throw Error(Errc::TokenNotPresent, serial);
  auto& device = tokens_.at(serial);
  gateway::GatewayAgent* agent = nullptr;
  LinkId mgmt = 0;
  if (gateway_id == kRogueNode) {
    ensure_rogue();
    agent = rogue_.get();
    mgmt = rogue_link_;
  } else {
    auto& g = node(gateway_id);
    agent = g.agent.get();
    mgmt = g.mgmt;
  }
  agent->plug(device, now_);
  std::vector<Bytes> out;
  try {
    out = agent->on_button_press(now_);
  } catch (...) {
    agent->unplug();
    throw;
  }
  agent->unplug();
  for (auto& body : out) transmit(mgmt, agent->id(), std::move(body));
}

std::string Simulation::capture_log() const {
  std::string out;
  for (const auto& c : captures_) {
    nlohmann::json j = {{"time", c.time}, {"link", links_.at(c.link - 1).name}, {"from", c.from},
                        {"to", c.to}, {"hex", to_hex(c.bytes)}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<HarmWindow> Simulation::harm_windows() const {
  std::vector<HarmWindow> out;
  for (const auto& [serial, at] : stolen_) {
    HarmWindow w{serial, at, std::nullopt, std::nullopt};
    for (const auto& ev : registry_->events()) {
      if (ev.time < at) continue;
      if (!w.first_use && ev.actor == serial && ev.ok()) w.first_use = ev.time;
      if (!w.contained_at && ev.action == registry::Action::DecommissionToken && ev.token_serial == serial) {
        w.contained_at = ev.time;
      }
    }
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace tokengate::netsim
