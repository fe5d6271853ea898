#include "tokengate/netsim/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "tokengate/common/error.hpp"

namespace tokengate::netsim {

using nlohmann::json;

namespace {

LinkKind via_of(const json& c) {
  auto v = c.value("via", std::string("isolated"));
  if (v == "isolated") return LinkKind::Isolated;
  if (v == "insecure") return LinkKind::Insecure;
  throw Error(Errc::Usage, "via must be isolated or insecure");
}

Bytes payload_of(const json& c) {
  if (c.contains("hex")) return from_hex(c.at("hex").get<std::string>());
  auto text = c.at("payload").get<std::string>();
  return Bytes(text.begin(), text.end());
}

std::set<std::string> string_set(const json& j) {
  std::set<std::string> out;
  for (const auto& v : j) out.insert(v.get<std::string>());
  return out;
}

std::string join(const std::set<std::string>& s) {
  std::string out = "[";
  for (const auto& v : s) out += (out.size() > 1 ? "," : "") + v;
  return out + "]";
}

}  // namespace

ScenarioRunner::ScenarioRunner(SimOptions options) : sim_(options) {}

void ScenarioRunner::run(std::istream& in) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    auto first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos || text[first] == '#') continue;
    json command;
    try {
      command = json::parse(text);
    } catch (const json::exception& e) {
      throw Error(Errc::Usage, "line " + std::to_string(line) + ": " + e.what());
    }
    execute(command, line);
  }
}

void ScenarioRunner::run_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  run(in);
}

void ScenarioRunner::execute(const json& command, std::size_t line) {
  line_ = line;
  auto where = "line " + std::to_string(line) + ": ";
  if (!command.is_object() || !command.contains("cmd")) throw Error(Errc::Usage, where + "missing cmd");
  ++commands_;
  std::optional<std::string> expect;
  if (command.contains("expect")) expect = command.at("expect").get<std::string>();
  try {
    dispatch(command);
  } catch (const Error& e) {
    if (e.code() == Errc::AssertionFailed) throw;
    if (!expect) throw Error(e.code(), where + e.what());
    if (*expect != to_string(e.code())) {
      throw Error(Errc::AssertionFailed, where + "expected " + *expect + ", got " + e.what());
    }
    return;
  } catch (const json::exception& e) {
    throw Error(Errc::Usage, where + e.what());
  }
  if (expect) throw Error(Errc::AssertionFailed, where + "expected " + *expect + ", command succeeded");
}

void ScenarioRunner::dispatch(const json& c) {
  const auto cmd = c.at("cmd").get<std::string>();
  auto str = [&](const char* key) { return c.at(key).get<std::string>(); };

  if (cmd == "provision_gateway") {
    std::optional<MacAddress> mac;
    if (c.contains("macsec_address")) mac = MacAddress::parse(str("macsec_address"));
    sim_.provision_gateway(str("id"), via_of(c), mac);
  } else if (cmd == "provision_token") {
    sim_.provision_token(str("serial"), str("channel"), via_of(c));
  } else if (cmd == "plug") {
    sim_.plug(str("serial"), str("gateway"));
  } else if (cmd == "unplug") {
    sim_.unplug(str("serial"));
  } else if (cmd == "press") {
    sim_.press(str("gateway"));
  } else if (cmd == "send") {
    sim_.send(str("from"), c.value("to", std::string()), payload_of(c),
              c.value("ether_type", std::uint16_t{0x0800}));
  } else if (cmd == "advance") {
    sim_.advance(c.at("ticks").get<std::uint64_t>());
  } else if (cmd == "silence") {
    sim_.silence(str("gateway"));
  } else if (cmd == "resume") {
    sim_.resume(str("gateway"));
  } else if (cmd == "reconnect") {
    sim_.reconnect(str("gateway"));
  } else if (cmd == "remove") {
    sim_.remove(str("channel"), str("gateway"));
  } else if (cmd == "decommission_gateway") {
    sim_.decommission_gateway(str("id"));
  } else if (cmd == "decommission_token") {
    sim_.decommission_token(str("serial"), c.value("teardown", false));
  } else if (cmd == "revert") {
    // A negative event is an index from the end of the log.
    auto e = c.at("event").get<std::int64_t>();
    const auto& events = sim_.registry().events();
    if (e < 0) {
      if (static_cast<std::size_t>(-e) > events.size()) throw Error(Errc::Usage, "event index out of range");
      e = static_cast<std::int64_t>(events[events.size() - static_cast<std::size_t>(-e)].event_id);
    }
    sim_.revert(static_cast<std::uint64_t>(e));
  } else if (cmd == "steal") {
    sim_.adversary_steal_token(str("serial"));
  } else if (cmd == "attacker_use") {
    sim_.adversary_use_token(str("serial"), str("gateway"));
  } else if (cmd == "inject") {
    sim_.adversary_inject(str("link"), str("to"), from_hex(str("hex")));
  } else if (cmd == "replay") {
    if (c.contains("index")) {
      sim_.adversary_replay(str("link"), c.at("index").get<std::size_t>());
    } else {
      auto n = sim_.adversary_capture(str("link")).size();
      for (std::size_t i = 0; i < n; ++i) sim_.adversary_replay(str("link"), i);
    }
  } else if (cmd == "capture") {
    sim_.adversary_capture(str("link"));
  } else if (cmd == "drop") {
    sim_.adversary_drop(str("link"), c.value("count", std::size_t{1}));
  } else if (cmd == "assert") {
    check(c);
  } else {
    throw Error(Errc::Usage, "unknown cmd " + cmd);
  }
}

void ScenarioRunner::check(const json& c) {
  const auto what = c.at("check").get<std::string>();
  const auto where = "line " + std::to_string(line_) + ": " + what + ": ";
  auto fail = [&](const std::string& msg) { throw Error(Errc::AssertionFailed, where + msg); };
  auto expect_eq = [&](const auto& got, const auto& want, const std::string& field) {
    if (!(got == want)) fail(field + " mismatch");
  };
  const auto& reg = sim_.registry();

  if (what == "gateway_record") {
    // Server holds (pubKey, IP address, MACsec address); the gateway holds
    // the server's public key and address and its own private key.
    auto id = c.at("gateway").get<std::string>();
    const auto* rec = reg.find_gateway(id);
    if (rec == nullptr) fail("unknown gateway " + id);
    const auto& agent = sim_.gateway(id);
    const auto& ident = agent.identity();
    expect_eq(rec->public_key, ident.static_key.pub, "pubKey");
    expect_eq(crypto::dh_public_from_private(ident.static_key.priv), rec->public_key, "privKey");
    expect_eq(rec->mgmt_address, ident.mgmt_address, "mgmt_address");
    expect_eq(rec->macsec_address, ident.macsec_address, "macsec_address");
    expect_eq(ident.server_public_key, reg.identity().static_key.pub, "server pubKey");
    expect_eq(crypto::dh_public_from_private(reg.identity().static_key.priv), ident.server_public_key,
              "server privKey");
    expect_eq(ident.server_mgmt_address, reg.identity().mgmt_address, "server address");
    if (c.contains("mgmt_address")) expect_eq(rec->mgmt_address, c.at("mgmt_address").get<std::string>(), "mgmt_address");
    if (c.contains("macsec_address")) {
      expect_eq(rec->macsec_address.to_string(), c.at("macsec_address").get<std::string>(), "macsec_address");
    }
    if (c.contains("status")) {
      expect_eq(std::string(registry::to_string(rec->status)), c.at("status").get<std::string>(), "status");
    }
  } else if (what == "gateway") {
    const auto& g = sim_.gateway(c.at("gateway").get<std::string>());
    auto now = sim_.now();
    if (c.contains("mode")) expect_eq(std::string(gateway::to_string(g.mode())), c.at("mode").get<std::string>(), "mode");
    if (c.contains("led")) expect_eq(std::string(gateway::to_string(g.led(now))), c.at("led").get<std::string>(), "led");
    if (c.contains("sec_id")) {
      if (c.at("sec_id").is_null()) {
        if (g.sec_id()) fail("sec_id present");
      } else {
        expect_eq(g.sec_id().value_or(""), c.at("sec_id").get<std::string>(), "sec_id");
      }
    }
    if (c.contains("key_version")) expect_eq(g.key_version().value_or(0), c.at("key_version").get<std::uint32_t>(), "key_version");
    if (c.contains("status_line")) {
      if (g.status_line(now) != c.at("status_line").get<std::string>()) fail("status line is " + g.status_line(now));
    }
    if (c.contains("last_error")) expect_eq(g.last_error(), c.at("last_error").get<std::string>(), "last_error");
    // LED is a function of mode outside the error blink.
    auto led = g.led(now);
    if (led != gateway::Led::Red && (led == gateway::Led::Green) != (g.mode() == gateway::Mode::Member)) {
      fail("led does not follow mode");
    }
  } else if (what == "channel") {
    auto sec = c.at("channel").get<std::string>();
    auto it = reg.channels().find(sec);
    bool want = c.value("exists", true);
    if (!want) {
      if (it != reg.channels().end()) fail(sec + " exists");
      return;
    }
    if (it == reg.channels().end()) fail(sec + " does not exist");
    const auto& ch = it->second;
    if (c.contains("tokens")) {
      auto want_tokens = string_set(c.at("tokens"));
      if (ch.tokens != want_tokens) fail("tokens " + join(ch.tokens) + " != " + join(want_tokens));
    }
    std::set<std::string> members;
    for (const auto& [gw, idx] : ch.members) members.insert(gw);
    if (c.contains("members")) {
      auto want_members = string_set(c.at("members"));
      if (members != want_members) fail("members " + join(members) + " != " + join(want_members));
    }
    if (c.contains("key_version")) expect_eq(ch.key_version, c.at("key_version").get<std::uint32_t>(), "key_version");
    // Each member holds (secID, {member MACsec addresses}, key).
    std::set<MacAddress> addresses;
    for (const auto& gw : members) addresses.insert(reg.gateways().at(gw).macsec_address);
    for (const auto& gw : members) {
      const auto* state = sim_.gateway(gw).channel();
      if (state == nullptr) fail(gw + " holds no channel");
      expect_eq(state->sec_id(), sec, gw + " secID");
      std::set<MacAddress> held;
      for (const auto& m : state->members()) held.insert(m.macsec_address);
      expect_eq(held, addresses, gw + " member addresses");
      if (!(state->key() == ch.key)) fail(gw + " key differs from the server's");
      expect_eq(state->key_version(), ch.key_version, gw + " key_version");
    }
  } else if (what == "token") {
    auto serial = c.at("serial").get<std::string>();
    auto it = reg.tokens().find(serial);
    if (it == reg.tokens().end()) fail("unknown token " + serial);
    const auto& t = it->second;
    if (c.contains("status")) expect_eq(std::string(registry::to_string(t.status)), c.at("status").get<std::string>(), "status");
    if (c.contains("bound")) {
      if (c.at("bound").is_null()) {
        if (t.bound_channel) fail("still bound to " + *t.bound_channel);
      } else {
        expect_eq(t.bound_channel.value_or(""), c.at("bound").get<std::string>(), "bound");
      }
    }
    bool active = t.status == registry::TokenStatus::Active;
    if (sim_.hsm().contains(t.otp_secret_handle) != active) fail("HSM secret presence does not match status");
  } else if (what == "delivered") {
    auto to = c.at("to").get<std::string>();
    auto payload = payload_of(c);
    std::optional<MacAddress> src;
    if (c.contains("from")) src = sim_.endpoint_address(c.at("from").get<std::string>());
    auto n = static_cast<std::size_t>(std::count_if(
        sim_.endpoint_inbox(to).begin(), sim_.endpoint_inbox(to).end(),
        [&](const dataplane::Frame& f) { return f.payload == payload && (!src || f.src == *src); }));
    auto want = c.value("count", std::size_t{1});
    if (n != want) fail("delivered " + std::to_string(n) + " times, want " + std::to_string(want));
  } else if (what == "event") {
    const auto& events = reg.events();
    const registry::ConfigEvent* ev = nullptr;
    if (c.contains("id")) {
      auto id = c.at("id").get<std::uint64_t>();
      for (const auto& e : events) {
        if (e.event_id == id) ev = &e;
      }
    } else {
      auto idx = c.value("index", -1);
      auto pos = idx < 0 ? static_cast<long>(events.size()) + idx : idx;
      if (pos >= 0 && pos < static_cast<long>(events.size())) ev = &events[static_cast<std::size_t>(pos)];
    }
    if (ev == nullptr) fail("no such event");
    auto got = registry::to_json(*ev);
    for (const char* field : {"action", "gateway", "actor", "outcome", "sec_id", "token", "time", "reverts", "teardown"}) {
      if (c.contains(field) && got.value(field, json()) != c.at(field)) {
        fail(std::string(field) + " is " + got.value(field, json()).dump());
      }
    }
  } else if (what == "event_count") {
    expect_eq(reg.events().size(), c.at("equals").get<std::size_t>(), "event count");
  } else if (what == "rejections") {
    auto node = c.at("node").get<std::string>();
    auto code = c.at("code").get<std::string>();
    const auto& table = node == kServerNode ? sim_.server().rejections()
                        : node == kRogueNode ? sim_.rogue()->rejections()
                                              : sim_.gateway(node).rejections();
    auto it = table.find(code);
    std::uint64_t n = it == table.end() ? 0 : it->second;
    if (c.contains("equals") && n != c.at("equals").get<std::uint64_t>()) fail(code + " count " + std::to_string(n));
    if (c.contains("at_least") && n < c.at("at_least").get<std::uint64_t>()) fail(code + " count " + std::to_string(n));
  } else if (what == "rogue") {
    if (sim_.rogue() == nullptr) fail("no rogue box");
    if (c.contains("session")) expect_eq(sim_.rogue()->has_session(), c.at("session").get<bool>(), "session");
    if (c.contains("last_error")) expect_eq(sim_.rogue()->last_error(), c.at("last_error").get<std::string>(), "last_error");
  } else if (what == "no_secrets_in_captures") {
    std::string corpus;
    for (const auto& cap : sim_.captures()) corpus.append(cap.bytes.begin(), cap.bytes.end());
    for (const auto& s : sim_.audit_secrets()) {
      if (std::search(corpus.begin(), corpus.end(), s.begin(), s.end()) != corpus.end()) fail("secret found on the wire");
    }
  } else if (what == "harm_window") {
    auto serial = c.at("serial").get<std::string>();
    for (const auto& w : sim_.harm_windows()) {
      if (w.serial != serial) continue;
      if (c.contains("contained") && w.contained_at.has_value() != c.at("contained").get<bool>()) fail("containment");
      return;
    }
    fail(serial + " was never stolen");
  } else {
    throw Error(Errc::Usage, "unknown check " + what);
  }
}

json ScenarioRunner::report() const {
  json harm = json::array();
  for (const auto& w : sim_.harm_windows()) {
    json j = {{"serial", w.serial}, {"stolen_at", w.stolen_at}};
    j["first_use"] = w.first_use ? json(*w.first_use) : json();
    j["contained_at"] = w.contained_at ? json(*w.contained_at) : json();
    j["window"] = w.first_use && w.contained_at ? json(*w.contained_at - *w.first_use) : json();
    harm.push_back(std::move(j));
  }
  return {{"commands", commands_},
          {"time", sim_.now()},
          {"events", sim_.registry().events().size()},
          {"harm_windows", harm}};
}

}  // namespace tokengate::netsim
