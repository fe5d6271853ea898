#include "tokengate/common/error.hpp"
#include "tokengate/registry/registry.hpp"

namespace tokengate::registry {

namespace {

constexpr std::string_view kFormat = "tokengate-registry";
constexpr int kVersion = 1;
constexpr std::string_view kServerKeyLabel = "server-static-key";

std::string channel_key_label(const SecureChannel& ch) {
  return "channel-key:" + ch.sec_id + ":" + std::to_string(ch.instance) + ":" +
         std::to_string(ch.key_version);
}

}  // namespace

nlohmann::json to_json(const ConfigEvent& e) {
  nlohmann::json j = {
      {"event_id", e.event_id},
      {"time", e.time},
      {"actor", e.actor},
      {"gateway", e.gateway_id},
      {"token", e.token_serial},
      {"action", to_string(e.action)},
      {"sec_id", e.sec_id},
      {"instance", e.channel_instance},
      {"outcome", e.outcome},
  };
  if (e.reverts) j["reverts"] = *e.reverts;
  if (e.effect) j["effect"] = to_string(*e.effect);
  if (e.action == Action::DecommissionToken) j["teardown"] = e.teardown;
  return j;
}

ConfigEvent event_from_json(const nlohmann::json& j) {
  ConfigEvent e;
  e.event_id = j.at("event_id").get<std::uint64_t>();
  e.time = j.at("time").get<std::uint64_t>();
  e.actor = j.at("actor").get<std::string>();
  e.gateway_id = j.at("gateway").get<std::string>();
  e.token_serial = j.at("token").get<std::string>();
  e.action = action_from(j.at("action").get<std::string>());
  e.sec_id = j.at("sec_id").get<std::string>();
  e.channel_instance = j.at("instance").get<std::uint64_t>();
  e.outcome = j.at("outcome").get<std::string>();
  if (j.contains("reverts")) e.reverts = j.at("reverts").get<std::uint64_t>();
  if (j.contains("effect")) e.effect = action_from(j.at("effect").get<std::string>());
  if (j.contains("teardown")) e.teardown = j.at("teardown").get<bool>();
  return e;
}

nlohmann::json Registry::snapshot() const {
  nlohmann::json gateways = nlohmann::json::array();
  for (const auto& [id, gw] : gateways_) {
    gateways.push_back({
        {"gateway_id", gw.gateway_id},
        {"public_key", to_hex(gw.public_key)},
        {"mgmt_address", gw.mgmt_address},
        {"macsec_address", gw.macsec_address.to_string()},
        {"status", to_string(gw.status)},
        {"last_heartbeat", gw.last_heartbeat},
        {"last_handshake_counter", gw.last_handshake_counter},
    });
  }
  nlohmann::json tokens = nlohmann::json::array();
  for (const auto& [serial, t] : tokens_) {
    nlohmann::json tj = {
        {"serial", t.serial},
        {"otp_secret_handle", t.otp_secret_handle.value},
        {"status", to_string(t.status)},
        {"bound_channel", t.bound_channel ? nlohmann::json(*t.bound_channel) : nlohmann::json(nullptr)},
    };
    if (t.last_counters) {
      tj["last_counters"] = {t.last_counters->use_counter, t.last_counters->session_counter};
    } else {
      tj["last_counters"] = nullptr;
    }
    tokens.push_back(std::move(tj));
  }
  nlohmann::json channels = nlohmann::json::array();
  for (const auto& [id, ch] : channels_) {
    nlohmann::json members = nlohmann::json::object();
    for (const auto& [gw, index] : ch.members) members[gw] = index;
    channels.push_back({
        {"sec_id", ch.sec_id},
        {"instance", ch.instance},
        {"key_version", ch.key_version},
        {"key_wrapped", to_hex(hsm_->wrap(ch.key.view(), channel_key_label(ch)))},
        {"tokens", ch.tokens},
        {"members", members},
        {"next_sender_index", ch.next_sender_index},
    });
  }
  nlohmann::json retired = nlohmann::json::array();
  for (const auto& r : retired_) {
    retired.push_back({{"sec_id", r.sec_id},
                       {"instance", r.instance},
                       {"final_key_version", r.final_key_version},
                       {"retired_at", r.retired_at}});
  }
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : events_) events.push_back(to_json(e));

  return {
      {"format", kFormat},
      {"version", kVersion},
      {"server",
       {{"public_key", to_hex(identity_.static_key.pub)},
        {"private_key_wrapped", to_hex(hsm_->wrap(identity_.static_key.priv.view(), kServerKeyLabel))},
        {"mgmt_address", identity_.mgmt_address}}},
      {"options", {{"rotate_on_shrink", options_.rotate_on_shrink}}},
      {"next_event_id", next_event_id_},
      {"next_channel_instance", next_channel_instance_},
      {"gateways", gateways},
      {"tokens", tokens},
      {"channels", channels},
      {"retired_channels", retired},
      {"events", events},
  };
}

Registry Registry::restore(const nlohmann::json& doc, token::HsmStore& hsm, RandomSource& rng,
                           RegistryOptions options) {
  try {
    if (!doc.is_object() || doc.at("format") != kFormat || doc.at("version") != kVersion) {
      throw Error(Errc::CorruptSnapshot, "unsupported snapshot format");
    }
    const auto& server = doc.at("server");
    ServerIdentity identity;
    auto priv = hsm.unwrap(from_hex(server.at("private_key_wrapped").get<std::string>()), kServerKeyLabel);
    if (priv.size() != 32) throw Error(Errc::CorruptSnapshot, "server key size");
    std::copy(priv.begin(), priv.end(), identity.static_key.priv.data());
    secure_zero(priv);
    identity.static_key.pub = crypto::dh_public_from_private(identity.static_key.priv);
    if (to_hex(identity.static_key.pub) != server.at("public_key").get<std::string>()) {
      throw Error(Errc::CorruptSnapshot, "server key mismatch");
    }
    identity.mgmt_address = server.at("mgmt_address").get<std::string>();
    options.rotate_on_shrink = doc.at("options").at("rotate_on_shrink").get<bool>();

    Registry r(std::move(identity), hsm, rng, options);
    r.next_event_id_ = doc.at("next_event_id").get<std::uint64_t>();
    r.next_channel_instance_ = doc.at("next_channel_instance").get<std::uint64_t>();
    for (const auto& g : doc.at("gateways")) {
      GatewayRecord gw;
      gw.gateway_id = g.at("gateway_id").get<std::string>();
      gw.public_key = array_from_hex<32>(g.at("public_key").get<std::string>());
      gw.mgmt_address = g.at("mgmt_address").get<std::string>();
      gw.macsec_address = MacAddress::parse(g.at("macsec_address").get<std::string>());
      gw.status = gateway_status_from(g.at("status").get<std::string>());
      gw.last_heartbeat = g.at("last_heartbeat").get<std::uint64_t>();
      gw.last_handshake_counter = g.at("last_handshake_counter").get<std::uint64_t>();
      r.gateways_.emplace(gw.gateway_id, std::move(gw));
    }
    for (const auto& t : doc.at("tokens")) {
      TokenRecord tr;
      tr.serial = t.at("serial").get<std::string>();
      tr.otp_secret_handle = token::HsmHandle{t.at("otp_secret_handle").get<std::uint32_t>()};
      auto status = t.at("status").get<std::string>();
      if (status != "active" && status != "decommissioned") throw Error(Errc::CorruptSnapshot, "token status");
      tr.status = status == "active" ? TokenStatus::Active : TokenStatus::Decommissioned;
      if (!t.at("bound_channel").is_null()) tr.bound_channel = t.at("bound_channel").get<std::string>();
      if (!t.at("last_counters").is_null()) {
        tr.last_counters = CounterPair{t.at("last_counters").at(0).get<std::uint16_t>(),
                                       t.at("last_counters").at(1).get<std::uint8_t>()};
      }
      r.tokens_.emplace(tr.serial, std::move(tr));
    }
    for (const auto& c : doc.at("channels")) {
      SecureChannel ch;
      ch.sec_id = c.at("sec_id").get<std::string>();
      ch.instance = c.at("instance").get<std::uint64_t>();
      ch.key_version = c.at("key_version").get<std::uint32_t>();
      auto key = hsm.unwrap(from_hex(c.at("key_wrapped").get<std::string>()), channel_key_label(ch));
      if (key.size() != 32) throw Error(Errc::CorruptSnapshot, "channel key size");
      std::copy(key.begin(), key.end(), ch.key.data());
      secure_zero(key);
      ch.tokens = c.at("tokens").get<std::set<std::string>>();
      for (const auto& [gw, index] : c.at("members").items()) {
        if (!r.gateways_.contains(gw)) throw Error(Errc::CorruptSnapshot, "member is not a gateway");
        ch.members[gw] = index.get<std::uint32_t>();
      }
      ch.next_sender_index = c.at("next_sender_index").get<std::uint32_t>();
      r.channels_.emplace(ch.sec_id, std::move(ch));
    }
    for (const auto& rc : doc.at("retired_channels")) {
      r.retired_.push_back({rc.at("sec_id").get<std::string>(), rc.at("instance").get<std::uint64_t>(),
                            rc.at("final_key_version").get<std::uint32_t>(),
                            rc.at("retired_at").get<std::uint64_t>()});
    }
    for (const auto& e : doc.at("events")) r.events_.push_back(event_from_json(e));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptSnapshot, e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::CorruptSnapshot) throw;
    throw Error(Errc::CorruptSnapshot, e.what());
  }
}

}  // namespace tokengate::registry
