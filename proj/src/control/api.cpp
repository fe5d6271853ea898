#include "tokengate/control/api.hpp"

#include <charconv>

#include "tokengate/common/crypto.hpp"
#include "tokengate/common/error.hpp"

namespace tokengate::control {

using nlohmann::json;

void EventFeed::append(json event) {
  {
    std::lock_guard lock(mu_);
    events_.push_back(std::move(event));
  }
  cv_.notify_all();
}

std::vector<json> EventFeed::after(std::uint64_t after) const {
  std::lock_guard lock(mu_);
  std::vector<json> out;
  for (const auto& e : events_) {
    if (e.at("event_id").get<std::uint64_t>() > after) out.push_back(e);
  }
  return out;
}

std::vector<json> EventFeed::wait_after(std::uint64_t after, std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  auto ready = [&] {
    return closed_ || (!events_.empty() && events_.back().at("event_id").get<std::uint64_t>() > after);
  };
  cv_.wait_for(lock, timeout, ready);
  std::vector<json> out;
  for (const auto& e : events_) {
    if (e.at("event_id").get<std::uint64_t>() > after) out.push_back(e);
  }
  return out;
}

void EventFeed::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool EventFeed::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

json gateways_view(const registry::Registry& reg) {
  json list = json::array();
  for (const auto& [id, gw] : reg.gateways()) {
    json g = {{"gatewayId", id},
              {"publicKey", to_hex(gw.public_key)},
              {"mgmtAddress", gw.mgmt_address},
              {"macsecAddress", gw.macsec_address.to_string()},
              {"status", registry::to_string(gw.status)},
              {"lastHeartbeat", gw.last_heartbeat}};
    auto ch = reg.channel_of(id);
    g["secId"] = ch ? json(*ch) : json();
    list.push_back(std::move(g));
  }
  return {{"version", 1}, {"gateways", list}};
}

json channels_view(const registry::Registry& reg) {
  json list = json::array();
  for (const auto& [sec, ch] : reg.channels()) {
    json members = json::array();
    for (const auto& [gw, idx] : ch.members) {
      members.push_back({{"gatewayId", gw},
                         {"macsecAddress", reg.gateways().at(gw).macsec_address.to_string()},
                         {"senderIndex", idx}});
    }
    list.push_back({{"secId", sec},
                    {"instance", ch.instance},
                    {"keyVersion", ch.key_version},
                    {"tokens", ch.tokens},
                    {"members", members}});
  }
  return {{"version", 1}, {"channels", list}};
}

json tokens_view(const registry::Registry& reg) {
  json list = json::array();
  for (const auto& [serial, t] : reg.tokens()) {
    json j = {{"serial", serial}, {"status", registry::to_string(t.status)}};
    j["boundChannel"] = t.bound_channel ? json(*t.bound_channel) : json();
    list.push_back(std::move(j));
  }
  return {{"version", 1}, {"tokens", list}};
}

namespace {

ApiResponse error_response(int status, std::string_view code, std::string detail) {
  return {status, {{"error", code}, {"detail", std::move(detail)}}};
}

int status_for(Errc code) {
  switch (code) {
    case Errc::UnknownChannel:
    case Errc::UnknownGateway:
    case Errc::UnknownToken:
    case Errc::UnknownEvent:
      return 404;
    case Errc::Usage:
      return 400;
    default:
      return 409;
  }
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t start = 1;
  while (start <= path.size()) {
    auto end = path.find('/', start);
    if (end == std::string::npos) end = path.size();
    parts.push_back(path.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

std::optional<std::uint64_t> parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

}  // namespace

ControlApi::ControlApi(registry::Registry& registry, std::mutex& writer, std::string operator_credential,
                       Clock clock, std::function<void()> after_mutation)
    : registry_(&registry), writer_(&writer), credential_(std::move(operator_credential)),
      clock_(std::move(clock)), after_mutation_(std::move(after_mutation)) {}

bool ControlApi::authorized(const std::string& header) const {
  const std::string expected = "Bearer " + credential_;
  if (credential_.empty() || header.size() != expected.size()) return false;
  return crypto::equal({reinterpret_cast<const std::uint8_t*>(header.data()), header.size()},
                       {reinterpret_cast<const std::uint8_t*>(expected.data()), expected.size()});
}

ApiResponse ControlApi::handle(const ApiRequest& req) {
  auto parts = split_path(req.path);
  if (parts.size() < 2 || parts[0] != "v1") return error_response(404, "NOT_FOUND", req.path);

  if (req.method == "GET") {
    std::lock_guard lock(*writer_);
    if (parts.size() == 2 && parts[1] == "gateways") return {200, gateways_view(*registry_)};
    if (parts.size() == 2 && parts[1] == "channels") return {200, channels_view(*registry_)};
    if (parts.size() == 2 && parts[1] == "tokens") return {200, tokens_view(*registry_)};
    if (parts.size() == 2 && parts[1] == "events") {
      std::uint64_t after = 0;
      if (auto it = req.query.find("after"); it != req.query.end()) {
        auto v = parse_u64(it->second);
        if (!v) return error_response(400, "USAGE", "after must be an event id");
        after = *v;
      }
      json events = json::array();
      for (const auto& e : registry_->events()) {
        if (e.event_id > after) events.push_back(registry::to_json(e));
      }
      std::uint64_t next = registry_->events().empty() ? after : std::max(after, registry_->events().back().event_id);
      return {200, {{"version", 1}, {"events", events}, {"next", next}}};
    }
    return error_response(404, "NOT_FOUND", req.path);
  }

  if (req.method != "POST") return error_response(404, "NOT_FOUND", req.method + " " + req.path);
  if (!authorized(req.authorization)) return error_response(401, "UNAUTHORIZED", "operator credential required");

  const std::string actor(registry::kOperatorActor);
  try {
    json result;
    std::lock_guard lock(*writer_);
    const auto now = clock_();
    if (parts.size() == 5 && parts[1] == "channels" && parts[3] == "remove") {
      auto id = registry_->remove_gateway_from_channel(now, actor, parts[4], parts[2]);
      result = {{"eventId", id}};
    } else if (parts.size() == 4 && parts[1] == "gateways" && parts[3] == "decommission") {
      registry_->decommission_gateway(now, actor, parts[2]);
      result = {{"gatewayId", parts[2]}, {"status", "decommissioned"}};
    } else if (parts.size() == 4 && parts[1] == "tokens" && parts[3] == "decommission") {
      bool teardown = false;
      if (auto it = req.query.find("teardown"); it != req.query.end()) {
        if (it->second == "true") {
          teardown = true;
        } else if (it->second != "false") {
          return error_response(400, "USAGE", "teardown must be true or false");
        }
      }
      registry_->decommission_token(now, actor, parts[2], teardown);
      result = {{"serial", parts[2]}, {"status", "decommissioned"}, {"teardown", teardown}};
    } else if (parts.size() == 4 && parts[1] == "events" && parts[3] == "revert") {
      auto id = parse_u64(parts[2]);
      if (!id) return error_response(404, "UNKNOWN_EVENT", parts[2]);
      result = {{"eventId", registry_->revert_event(now, actor, *id)}};
    } else {
      return error_response(404, "NOT_FOUND", req.path);
    }
    if (after_mutation_) after_mutation_();
    return {200, result};
  } catch (const Error& e) {
    return error_response(status_for(e.code()), to_string(e.code()), e.what());
  }
}

}  // namespace tokengate::control
