#include "tokengate/gateway/agent.hpp"

#include <algorithm>
#include <sstream>

#include "tokengate/common/error.hpp"
#include "tokengate/mgmt/wire.hpp"

namespace tokengate::gateway {

std::string_view to_string(Mode m) { return m == Mode::Member ? "member" : "pass-through"; }

std::string_view to_string(Led l) {
  switch (l) {
    case Led::Off: return "off";
    case Led::Green: return "green";
    case Led::Red: return "red";
  }
  return "off";
}

GatewayAgent::GatewayAgent(GatewayIdentity identity, RandomSource& rng, std::uint64_t handshake_counter)
    : identity_(std::move(identity)), rng_(&rng), handshake_counter_(handshake_counter) {}

Bytes GatewayAgent::connect(std::uint64_t now) {
  (void)now;
  session_.reset();
  pending_.emplace(identity_.static_key, identity_.server_public_key, ++handshake_counter_, *rng_);
  return pending_->initiation();
}

void GatewayAgent::connection_lost() {
  if (session_) session_->close();
  session_.reset();
  pending_.reset();
}

Bytes GatewayAgent::seal(const mgmt::MessageBody& body) { return session_->seal(body); }

void GatewayAgent::blink(std::uint64_t now, std::string code) {
  red_ = true;
  red_until_ = now + kErrorBlinkTicks;
  last_error_ = std::move(code);
}

std::vector<Bytes> GatewayAgent::on_management(std::uint64_t now, ByteView body) {
  mgmt::wire::Header header;
  try {
    header = mgmt::wire::peek_header(body);
  } catch (const Error& e) {
    count(e.code());
    return {};
  }

  if (header.kind == mgmt::wire::kHandshakeResponse || header.kind == mgmt::wire::kHandshakeReject) {
    if (!pending_) {
      count(Errc::AuthFail);
      return {};
    }
    try {
      session_.emplace(pending_->complete(body));
    } catch (const Error& e) {
      // A forged rejection must not abort a handshake still in flight.
      count(e.code());
      if (header.kind == mgmt::wire::kHandshakeReject) last_error_ = std::string(to_string(e.code()));
      return {};
    }
    pending_.reset();
    next_heartbeat_ = now + mgmt::kHeartbeatInterval;
    last_heartbeat_ = now;
    return {};
  }
  if (header.kind == mgmt::wire::kHandshakeInit) {
    count(Errc::MalformedMessage);
    return {};
  }

  if (!session_) {
    count(Errc::NoSession);
    return {};
  }
  mgmt::ManagementMessage msg;
  try {
    msg = session_->open(body);
  } catch (const Error& e) {
    count(e.code());
    return {};
  }

  std::vector<Bytes> out;
  auto ack = [&] { out.push_back(seal(mgmt::AckBody{msg.sequence})); };
  auto refuse = [&](const Error& e) {
    out.push_back(seal(mgmt::ErrorBody{msg.sequence, std::string(to_string(e.code())), e.what()}));
  };

  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, mgmt::ChannelConfigBody>) {
          try {
            apply_channel_config(now, b);
            ack();
          } catch (const Error& e) {
            refuse(e);
          }
        } else if constexpr (std::is_same_v<T, mgmt::ChannelUpdateBody>) {
          apply_channel_update(now, b);
          ack();
        } else if constexpr (std::is_same_v<T, mgmt::ChannelTeardownBody>) {
          apply_teardown(b);
          ack();
        } else if constexpr (std::is_same_v<T, mgmt::ErrorBody>) {
          blink(now, b.code);
        } else if constexpr (std::is_same_v<T, mgmt::AckBody>) {
          last_error_.clear();
        } else {
          count(Errc::MalformedMessage);
        }
      },
      msg.body);
  return out;
}

std::vector<Bytes> GatewayAgent::tick(std::uint64_t now) {
  if (channel_) channel_->expire(now);
  if (red_ && now >= red_until_) red_ = false;
  if (!session_ || now < next_heartbeat_) return {};
  next_heartbeat_ = now + mgmt::kHeartbeatInterval;
  last_heartbeat_ = now;
  return {seal(mgmt::HeartbeatBody{now})};
}

void GatewayAgent::plug(token::TokenDevice& device, std::uint64_t now) {
  if (token_ != nullptr) throw Error(Errc::AlreadyPlugged, token_->serial());
  device.plug(identity_.gateway_id, now);
  token_ = &device;
}

void GatewayAgent::unplug() {
  if (token_ != nullptr) token_->unplug();
  token_ = nullptr;
}

std::vector<Bytes> GatewayAgent::on_button_press(std::uint64_t now) {
  if (token_ == nullptr) {
    blink(now, "NO_TOKEN");
    throw Error(Errc::NoToken, identity_.gateway_id);
  }
  if (!session_) {
    blink(now, "NO_SESSION");
    throw Error(Errc::NoSession, identity_.gateway_id);
  }
  auto otp = token_->press(now, *rng_);
  return {seal(mgmt::TokenEventBody{token_->serial(), otp.text()})};
}

void GatewayAgent::apply_channel_config(std::uint64_t now, const mgmt::ChannelConfigBody& config) {
  if (channel_ && channel_->sec_id() != config.sec_id) {
    throw Error(Errc::ChannelConflict, "member of " + channel_->sec_id());
  }
  bool listed = std::any_of(config.members.begin(), config.members.end(), [&](const mgmt::MemberInfo& m) {
    return m.macsec_address == identity_.macsec_address && m.sender_index == config.own_sender_index;
  });
  if (!listed) throw Error(Errc::MalformedMessage, "config does not list this gateway");
  if (channel_) {
    channel_->apply_config(now, config);
  } else {
    channel_.emplace(config, identity_.macsec_address);
  }
  ++configs_applied_;
}

void GatewayAgent::apply_channel_update(std::uint64_t now, const mgmt::ChannelUpdateBody& update) {
  if (!channel_ || channel_->sec_id() != update.sec_id) {
    ++anomalies_;
    return;
  }
  channel_->apply_update(now, update);
  ++configs_applied_;
}

void GatewayAgent::apply_teardown(const mgmt::ChannelTeardownBody& teardown) {
  if (!channel_ || channel_->sec_id() != teardown.sec_id) {
    ++anomalies_;
    return;
  }
  channel_->wipe();
  channel_.reset();
  ++configs_applied_;
}

std::vector<Bytes> GatewayAgent::from_endpoint(std::uint64_t now, ByteView frame) {
  (void)now;
  if (!channel_) return {Bytes(frame.begin(), frame.end())};
  dataplane::Frame inner;
  try {
    inner = dataplane::Frame::parse(frame);
  } catch (const Error& e) {
    count(e.code());
    return {};
  }
  std::vector<Bytes> out;
  for (const auto& peer : channel_->peers()) {
    try {
      out.push_back(channel_->protect(inner, peer));
    } catch (const Error& e) {
      count(e.code());
      break;
    }
  }
  return out;
}

std::optional<Bytes> GatewayAgent::from_network(std::uint64_t now, ByteView frame) {
  bool addressed = frame.size() >= 6 && std::equal(frame.begin(), frame.begin() + 6,
                                                   identity_.macsec_address.bytes.begin());
  if (!channel_ || !dataplane::is_protected(frame) || !addressed) return Bytes(frame.begin(), frame.end());
  try {
    return channel_->deprotect(now, frame).serialize();
  } catch (const Error& e) {
    count(e.code());
    return std::nullopt;
  }
}

Led GatewayAgent::led(std::uint64_t now) const {
  if (red_ && now < red_until_) return Led::Red;
  return channel_ ? Led::Green : Led::Off;
}

std::optional<std::string> GatewayAgent::sec_id() const {
  if (!channel_) return std::nullopt;
  return channel_->sec_id();
}

std::optional<std::uint32_t> GatewayAgent::key_version() const {
  if (!channel_) return std::nullopt;
  return channel_->key_version();
}

std::string GatewayAgent::status_line(std::uint64_t now) const {
  std::ostringstream s;
  s << identity_.gateway_id << ' ' << to_string(mode()) << ' ' << sec_id().value_or("-") << ' ';
  if (auto v = key_version()) {
    s << *v;
  } else {
    s << '-';
  }
  s << ' ' << to_string(led(now)) << ' ' << last_heartbeat_;
  return s.str();
}

nlohmann::json GatewayAgent::to_state() const {
  return {
      {"format", "tokengate-gateway"},
      {"version", 1},
      {"gateway_id", identity_.gateway_id},
      {"static_private_key", to_hex(identity_.static_key.priv.view())},
      {"macsec_address", identity_.macsec_address.to_string()},
      {"mgmt_address", identity_.mgmt_address},
      {"server_public_key", to_hex(identity_.server_public_key)},
      {"server_mgmt_address", identity_.server_mgmt_address},
      {"handshake_counter", handshake_counter_},
  };
}

GatewayAgent GatewayAgent::from_state(const nlohmann::json& state, RandomSource& rng) {
  try {
    if (state.at("format") != "tokengate-gateway" || state.at("version") != 1) {
      throw Error(Errc::Usage, "not a gateway state file");
    }
    GatewayIdentity id;
    id.gateway_id = state.at("gateway_id").get<std::string>();
    id.static_key.priv = crypto::DhPrivate(array_from_hex<32>(state.at("static_private_key").get<std::string>()));
    id.static_key.pub = crypto::dh_public_from_private(id.static_key.priv);
    id.macsec_address = MacAddress::parse(state.at("macsec_address").get<std::string>());
    id.mgmt_address = state.at("mgmt_address").get<std::string>();
    id.server_public_key = array_from_hex<32>(state.at("server_public_key").get<std::string>());
    id.server_mgmt_address = state.at("server_mgmt_address").get<std::string>();
    return GatewayAgent(std::move(id), rng, state.at("handshake_counter").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Usage, std::string("gateway state: ") + e.what());
  }
}

}  // namespace tokengate::gateway
