// Acceptance suite: one line per criterion, "PASS" or "FAIL", followed by the
// measured quantities and the pinned bound. Exit status is the number of
// failures (capped at 1).

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tokengate/common/error.hpp"
#include "tokengate/control/api.hpp"
#include "tokengate/dataplane/frame.hpp"
#include "tokengate/netsim/scenario.hpp"
#include "tokengate/otp/otp.hpp"
#include "tokengate/registry/registry.hpp"

using namespace tokengate;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double limit_seconds;  // 0: no runtime bound
  std::function<Outcome()> run;
};

std::string scenario(const std::string& name) { return std::string(TOKENGATE_SCENARIO_DIR) + "/" + name; }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

std::set<std::string> members(const registry::Registry& reg, const std::string& sec) {
  std::set<std::string> out;
  auto it = reg.channels().find(sec);
  if (it == reg.channels().end()) return out;
  for (const auto& [gw, idx] : it->second.members) out.insert(gw);
  return out;
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

// Occurrences of any secret, raw or hex-encoded (either case), in hay.
std::size_t secret_hits(const std::string& hay, const std::vector<Bytes>& secrets) {
  std::size_t hits = 0;
  for (const auto& s : secrets) {
    const std::string raw(s.begin(), s.end());
    const auto hex = to_hex(s);
    for (const auto& needle : {raw, hex, upper(hex)}) {
      if (hay.find(needle) != std::string::npos) ++hits;
    }
  }
  return hits;
}

void join_all(netsim::Simulation& sim, const std::string& serial, const std::vector<std::string>& gws) {
  for (const auto& g : gws) {
    sim.plug(serial, g);
    sim.press(g);
    sim.advance(5);
    sim.unplug(serial);
  }
}

// ---------------------------------------------------------------------------

Outcome table1() {
  netsim::ScenarioRunner r;
  r.run_file(scenario("steps_table1.jsonl"));
  return {true, fmt("%zu scripted commands incl. per-step field assertions, %zu events", r.commands_run(),
                    r.sim().registry().events().size())};
}

Outcome otp_suite() {
  using namespace otp;
  std::mt19937_64 rng(20260101);
  auto random_secret = [&] {
    ByteArray<16> k{};
    for (auto& b : k) b = static_cast<std::uint8_t>(rng());
    return OtpSecret(k);
  };
  auto random_plain = [&] {
    OtpPlain p;
    for (auto& b : p.private_id) b = static_cast<std::uint8_t>(rng());
    p.use_counter = static_cast<std::uint16_t>(rng() & 0x7fff);
    p.timestamp = static_cast<std::uint32_t>(rng() & 0xFFFFFF);
    p.session_counter = static_cast<std::uint8_t>(rng());
    p.random = static_cast<std::uint16_t>(rng());
    return p;
  };
  auto random_public = [&] {
    PublicId id{};
    for (auto& b : id) b = static_cast<std::uint8_t>(rng());
    return id;
  };

  int round_trips = 0;
  for (int i = 0; i < 1000; ++i) {
    auto secret = random_secret();
    auto pub = random_public();
    auto plain = random_plain();
    auto v = otp_verify(secret, otp_generate(secret, pub, plain));
    plain.crc = v.plain.crc;
    if (v.public_id == pub && v.plain == plain) ++round_trips;
  }

  int bad_crc = 0;
  for (int i = 0; i < 1000; ++i) {
    auto otp = otp_generate(random_secret(), random_public(), random_plain());
    try {
      otp_verify(random_secret(), otp);
    } catch (const Error& e) {
      if (e.code() == Errc::BadCrc) ++bad_crc;
    }
  }

  // The same mutations also go through the HSM, which additionally matches
  // the decrypted private ID; reported for information only.
  DeterministicRandom hrng(5);
  token::HsmStore fuzz_hsm(token::MasterKey(hrng.bytes<32>()));
  int mutations = 0;
  int accepted = 0;
  int hsm_accepted = 0;
  for (int n = 0; n < 20; ++n) {
    auto secret = random_secret();
    auto plain = random_plain();
    auto pub = random_public();
    auto otp = otp_generate(secret, pub, plain);
    auto handle = fuzz_hsm.store(pub, plain.private_id, secret);
    for (std::size_t pos = 12; pos < kOtpTextLength; ++pos) {
      for (char c : kModhexAlphabet) {
        if (c == otp.text()[pos]) continue;
        auto mutated = otp.text();
        mutated[pos] = c;
        ++mutations;
        try {
          otp_verify(secret, mutated);
          ++accepted;
        } catch (const Error&) {
        }
        try {
          fuzz_hsm.verify(handle, OtpString::parse(mutated));
          ++hsm_accepted;
        } catch (const Error&) {
        }
      }
    }
  }
  const double max_fraction = 1.0 / 65536.0;
  const double fraction = static_cast<double>(accepted) / mutations;

  // Resubmission through the server: every accepted OTP is refused the
  // second time.
  DeterministicRandom drng(77);
  token::HsmStore hsm(token::MasterKey(drng.bytes<32>()));
  registry::Registry reg({crypto::dh_generate(drng), "10.0.0.1"}, hsm, drng);
  reg.provision_gateway(registry::LinkKind::Isolated,
                        {"G1", crypto::dh_generate(drng).pub, "10.0.1.1", MacAddress::parse("02:00:00:00:00:01")});
  token::TokenDevice device("1", drng);
  reg.provision_token(registry::LinkKind::Isolated, device, "green");
  device.plug("G1", 0);
  int accepted_first = 0;
  int rejected_second = 0;
  for (std::uint64_t t = 1; t <= 1000; ++t) {
    auto otp = device.press(t, drng).text();
    try {
      reg.handle_token_event(t, "G1", "1", otp);
      ++accepted_first;
    } catch (const Error&) {
      continue;
    }
    try {
      reg.handle_token_event(t, "G1", "1", otp);
    } catch (const Error& e) {
      if (e.code() == Errc::RejectReplay) ++rejected_second;
    }
  }

  bool pass = round_trips == 1000 && bad_crc >= 990 && mutations == 32 * 15 * 20 && fraction <= max_fraction &&
              accepted_first == 1000 && rejected_second == accepted_first;
  return {pass, fmt("round-trips %d/1000; wrong-key BAD_CRC %d/1000 (>=990); mutations accepted by otp_verify "
                    "%d/%d = %.2e (<= %.2e; chance expectation %.3f), by the HSM %d; resubmissions rejected %d/%d",
                    round_trips, bad_crc, accepted, mutations, fraction, max_fraction, mutations * max_fraction,
                    hsm_accepted, rejected_second, accepted_first)};
}

Outcome group_channel() {
  netsim::Simulation sim(netsim::SimOptions{.seed = 11});
  for (const char* g : {"G1", "G2", "G3"}) sim.provision_gateway(g);
  sim.provision_token("100", "green");
  sim.advance(5);
  join_all(sim, "100", {"G1", "G2", "G3"});
  bool joined = members(sim.registry(), "green") == std::set<std::string>{"G1", "G2", "G3"};

  std::vector<std::string> payloads;
  int exchanges_ok = 0;
  const std::vector<std::pair<std::string, std::string>> pairs = {{"G1", "G2"}, {"G1", "G3"}, {"G2", "G3"}};
  for (const auto& [a, b] : pairs) {
    std::size_t ok = 0;
    for (const auto& [from, to] : {std::pair{a, b}, std::pair{b, a}}) {
      std::string text = "exchange " + from + "->" + to + " carrying a recognisable plaintext body";
      payloads.push_back(text);
      auto before = sim.endpoint_inbox(to).size();
      sim.send(from, to, Bytes(text.begin(), text.end()));
      sim.advance(5);
      const auto& inbox = sim.endpoint_inbox(to);
      if (inbox.size() == before + 1 && inbox.back().payload == Bytes(text.begin(), text.end())) ++ok;
    }
    if (ok == 2) ++exchanges_ok;
  }

  const auto g1_key = sim.gateway("G1").channel()->key();
  const auto v1 = sim.registry().channels().at("green").key_version;

  sim.plug("100", "G1");
  sim.press("G1");
  sim.advance(5);
  sim.unplug("100");
  const auto leave_time = sim.now();
  const auto& green = sim.registry().channels().at("green");
  bool left = members(sim.registry(), "green") == std::set<std::string>{"G2", "G3"} && green.key_version > v1 &&
              !(green.key == g1_key) && sim.gateway("G1").mode() == gateway::Mode::PassThrough;

  for (int i = 0; i < 20; ++i) {
    std::string text = "post-leave message " + std::to_string(i);
    payloads.push_back(text);
    sim.send(i % 2 ? "G2" : "G3", i % 2 ? "G3" : "G2", Bytes(text.begin(), text.end()));
    std::string bcast = "post-leave broadcast " + std::to_string(i);
    payloads.push_back(bcast);
    sim.send("G2", "", Bytes(bcast.begin(), bcast.end()));
  }
  sim.advance(5);

  std::size_t captured = 0;
  std::size_t recovered = 0;
  std::size_t post_leave_protected = 0;
  std::size_t g1_opened = 0;
  std::string all;
  for (const auto& c : sim.captures()) {
    ++captured;
    all.append(c.bytes.begin(), c.bytes.end());
    if (c.time > leave_time && dataplane::is_protected(c.bytes)) {
      ++post_leave_protected;
      if (dataplane::open_with_key(g1_key, c.bytes)) ++g1_opened;
    }
  }
  for (const auto& p : payloads) {
    if (all.find(p) != std::string::npos) ++recovered;
  }
  // What G1's agent, now pass-through, did with the post-leave frames: it
  // must not have delivered any of them decrypted.
  std::size_t g1_leaks = 0;
  for (const auto& f : sim.endpoint_inbox("G1")) {
    std::string s(f.payload.begin(), f.payload.end());
    if (s.rfind("post-leave", 0) == 0) ++g1_leaks;
  }

  bool pass = joined && exchanges_ok == 3 && recovered == 0 && left && post_leave_protected > 0 && g1_opened == 0 &&
              g1_leaks == 0;
  return {pass, fmt("pairwise exchanges %d/3; payloads recovered from %zu captured frames: %zu; after G1 leaves "
                    "keyVersion %u->%u, G1 opens %zu/%zu post-leave frames, delivers %zu",
                    exchanges_ok, captured, recovered, v1, green.key_version, g1_opened, post_leave_protected,
                    g1_leaks)};
}

Outcome stolen_token() {
  netsim::Simulation sim(netsim::SimOptions{.seed = 12});
  for (const char* g : {"G1", "G2", "G3"}) sim.provision_gateway(g);
  sim.provision_token("555", "green");
  sim.advance(5);
  join_all(sim, "555", {"G1", "G2"});
  const auto pre_attack = members(sim.registry(), "green");
  auto member_view = [&](const std::set<std::string>& expect) {
    if (members(sim.registry(), "green") != expect) return false;
    const auto& ch = sim.registry().channels().at("green");
    for (const auto& id : sim.gateway_ids()) {
      const auto& g = sim.gateway(id);
      if (expect.contains(id)) {
        if (g.sec_id() != "green" || g.key_version() != ch.key_version || !(g.channel()->key() == ch.key)) {
          return false;
        }
      } else if (g.mode() != gateway::Mode::PassThrough) {
        return false;
      }
    }
    return true;
  };

  sim.adversary_steal_token("555");
  sim.adversary_use_token("555", "G3");
  sim.advance(5);
  const auto& attack = sim.registry().events().back();
  bool logged = attack.action == registry::Action::Join && attack.gateway_id == "G3" && attack.token_serial == "555" &&
                attack.ok() && members(sim.registry(), "green").contains("G3");
  const auto attack_id = attack.event_id;

  sim.revert(attack_id);
  sim.advance(5);
  bool restored_after_revert = member_view(pre_attack);

  sim.decommission_token("555", true);
  sim.advance(5);
  bool torn_down = !sim.registry().channels().contains("green");
  for (const auto& id : sim.gateway_ids()) torn_down = torn_down && sim.gateway(id).mode() == gateway::Mode::PassThrough;

  // The channel is rebuilt for the original members with a replacement.
  sim.provision_token("556", "green");
  join_all(sim, "556", {"G1", "G2"});
  bool restored_after_teardown = member_view(pre_attack);

  int later_uses = 0;
  int rejected = 0;
  for (const auto& target : {"G1", "G2", "G3", "G1", "G3"}) {
    auto before = sim.registry().events().size();
    ++later_uses;
    sim.adversary_use_token("555", target);
    sim.advance(5);
    const auto& ev = sim.registry().events();
    if (ev.size() == before + 1 && ev.back().outcome == "REJECT_DECOMMISSIONED_TOKEN" && ev.back().actor == "555") {
      ++rejected;
    }
  }
  bool unchanged = member_view(pre_attack);

  bool pass = logged && restored_after_revert && torn_down && restored_after_teardown && rejected == later_uses &&
              unchanged;
  return {pass, fmt("malicious join logged with token 555: %s; revert restores {G1,G2}: %s; teardown clears all "
                    "members: %s; replacement restores {G1,G2}: %s; later uses rejected %d/%d",
                    logged ? "yes" : "no", restored_after_revert ? "yes" : "no", torn_down ? "yes" : "no",
                    restored_after_teardown ? "yes" : "no", rejected, later_uses)};
}

Outcome trust_boundary() {
  netsim::Simulation sim(netsim::SimOptions{.seed = 13});
  int not_isolated = 0;
  try {
    sim.provision_gateway("G9", registry::LinkKind::Insecure);
  } catch (const Error& e) {
    if (e.code() == Errc::NotIsolated) ++not_isolated;
  }
  try {
    sim.provision_token("9", "green", registry::LinkKind::Insecure);
  } catch (const Error& e) {
    if (e.code() == Errc::NotIsolated) ++not_isolated;
  }
  bool nothing_provisioned = sim.registry().gateways().empty() && sim.registry().tokens().empty();

  for (const char* g : {"G1", "G2", "G3"}) sim.provision_gateway(g);
  sim.provision_token("7", "green");
  sim.advance(5);
  join_all(sim, "7", {"G1", "G2"});
  sim.send("G1", "G2", Bytes{1, 2, 3});
  sim.advance(5);

  // An attacker box with its own key pair.
  sim.provision_token("8", "blue");
  sim.adversary_steal_token("8");
  try {
    sim.adversary_use_token("8", std::string(netsim::kRogueNode));
  } catch (const Error&) {
  }
  sim.advance(5);
  bool rogue_refused = sim.rogue() != nullptr && !sim.rogue()->has_session() &&
                      sim.server().rejections().contains("AUTH_FAIL");

  auto digest = [&] {
    const auto snap = sim.registry().snapshot();
    return json{{"events", sim.registry().events().size()}, {"channels", snap.at("channels")},
                {"tokens", snap.at("tokens")}}
        .dump();
  };
  auto configs = [&] {
    std::vector<std::uint64_t> out;
    for (const auto& id : sim.gateway_ids()) out.push_back(sim.gateway(id).configs_applied());
    return out;
  };
  const auto digest_before = digest();
  const auto configs_before = configs();

  std::vector<netsim::CapturedFrame> pool;
  for (const auto& c : sim.captures()) {
    if (sim.links().at(c.link - 1).name.rfind("mgmt:", 0) == 0) pool.push_back(c);
  }
  std::mt19937_64 rng(99);
  const std::vector<std::string> gws = {"G1", "G2", "G3"};
  std::size_t injected = 0;
  while (injected < 10000) {
    for (int k = 0; k < 100; ++k, ++injected) {
      const auto& c = pool[rng() % pool.size()];
      const auto& link = sim.links().at(c.link - 1).name;
      switch (injected % 5) {
        case 0:  // verbatim replay on its own link
          sim.adversary_inject(link, c.to, c.bytes);
          break;
        case 1: {  // replay onto another gateway's link
          const auto& g = gws[rng() % gws.size()];
          bool to_server = c.to == netsim::kServerNode;
          sim.adversary_inject("mgmt:" + g, to_server ? std::string(netsim::kServerNode) : g, c.bytes);
          break;
        }
        case 2: {  // single bit flip
          auto b = c.bytes;
          b[rng() % b.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
          sim.adversary_inject(link, c.to, b);
          break;
        }
        case 3: {  // valid header, forged sequence and body
          auto b = c.bytes;
          if (b.size() > 16) {
            for (std::size_t i = 8; i < 16; ++i) b[i] = static_cast<std::uint8_t>(rng());
            for (std::size_t i = 28; i < b.size(); ++i) b[i] = static_cast<std::uint8_t>(rng());
          }
          sim.adversary_inject(link, c.to, b);
          break;
        }
        default: {  // garbage of random length
          Bytes b(1 + rng() % 200);
          for (auto& x : b) x = static_cast<std::uint8_t>(rng());
          if (rng() % 2) {
            b[0] = 'T';
            if (b.size() > 1) b[1] = 'G';
            if (b.size() > 2) b[2] = 1;
          }
          sim.adversary_inject(link, c.to, b);
          break;
        }
      }
    }
    sim.advance(2);
  }
  sim.advance(5);
  const bool registry_same = digest() == digest_before;
  const bool configs_same = configs() == configs_before;
  std::uint64_t server_drops = sim.server().rejected_total();

  // The fleet still works afterwards.
  sim.send("G2", "G1", Bytes{4, 5, 6});
  sim.advance(5);
  bool still_works = !sim.endpoint_inbox("G1").empty() && sim.endpoint_inbox("G1").back().payload == Bytes{4, 5, 6};

  bool pass = not_isolated == 2 && nothing_provisioned && rogue_refused && injected == 10000 && registry_same &&
              configs_same && still_works;
  return {pass, fmt("insecure provisioning rejected %d/2; unregistered key handshake refused: %s; %zu injected/"
                    "replayed frames -> registry mutations %d, applied configs changed %d (server dropped %llu); "
                    "fleet still delivers: %s",
                    not_isolated, rogue_refused ? "yes" : "no", injected, registry_same ? 0 : 1, configs_same ? 0 : 1,
                    static_cast<unsigned long long>(server_drops), still_works ? "yes" : "no")};
}

Outcome liveness() {
  const std::uint64_t h = mgmt::kHeartbeatInterval;
  int exact = 0;
  int trials = 0;
  std::string worst;
  for (std::uint64_t silence_at : {2500ull, 3003ull, 3004ull, 4321ull, 7999ull}) {
    ++trials;
    netsim::Simulation sim(netsim::SimOptions{.seed = 14});
    sim.provision_gateway("G1");
    sim.provision_gateway("G2");
    sim.advance(silence_at);
    sim.silence("G1");
    const auto last = sim.registry().gateways().at("G1").last_heartbeat;
    std::optional<std::uint64_t> alarm;
    while (!alarm && sim.now() < last + 10 * h) {
      sim.advance(1);
      for (const auto& e : sim.registry().events()) {
        if (e.action == registry::Action::OfflineAlarm && e.gateway_id == "G1") alarm = e.time;
      }
    }
    bool g2_online = sim.registry().gateways().at("G2").status == registry::GatewayStatus::Online;
    if (alarm && *alarm == last + 3 * h && g2_online) {
      ++exact;
    } else {
      worst = fmt("silenced at %llu, last %llu, alarm %lld", static_cast<unsigned long long>(silence_at),
                  static_cast<unsigned long long>(last), alarm ? static_cast<long long>(*alarm) : -1LL);
    }
  }
  return {exact == trials, fmt("alarm at lastHeartbeat + 3*%llu exactly in %d/%d silencing offsets%s%s",
                               static_cast<unsigned long long>(h), exact, trials, worst.empty() ? "" : "; ",
                               worst.c_str())};
}

Outcome hygiene() {
  std::size_t hits = 0;
  std::size_t bytes_scanned = 0;
  std::size_t secrets_checked = 0;
  for (const char* file :
       {"steps_table1.jsonl", "group_channel.jsonl", "stolen_token.jsonl", "liveness.jsonl", "trust_boundary.jsonl"}) {
    netsim::ScenarioRunner r(netsim::SimOptions{.seed = 15});
    auto& sim = r.sim();
    std::mutex writer;
    control::ControlApi api(sim.registry(), writer, "acceptance", [&] { return sim.now(); },
                            [&] { sim.flush_server(); });
    std::string corpus;
    auto take_snapshots = [&] {
      corpus += sim.registry().snapshot().dump();
      corpus += sim.hsm().serialize();
      for (const char* p : {"/v1/gateways", "/v1/channels", "/v1/tokens", "/v1/events"}) {
        corpus += api.handle({"GET", p, {}, ""}).body.dump();
      }
    };
    std::ifstream in(scenario(file));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      auto c = json::parse(line);
      // Operator commands go through the API so its responses are scanned.
      if (c.at("cmd") == "decommission_token" && !c.contains("expect")) {
        corpus += api.handle({"POST", "/v1/tokens/" + c.at("serial").get<std::string>() + "/decommission",
                              {{"teardown", c.value("teardown", false) ? "true" : "false"}}, "Bearer acceptance"})
                      .body.dump();
      } else if (c.at("cmd") == "revert" && !c.contains("expect")) {
        auto idx = c.at("event").get<std::int64_t>();
        const auto& ev = sim.registry().events();
        auto id = idx < 0 ? ev.at(ev.size() + idx).event_id : static_cast<std::uint64_t>(idx);
        corpus += api.handle({"POST", "/v1/events/" + std::to_string(id) + "/revert", {}, "Bearer acceptance"})
                      .body.dump();
      } else {
        r.execute(c);
      }
      take_snapshots();
    }
    for (const auto& cap : sim.captures()) corpus.append(cap.bytes.begin(), cap.bytes.end());
    corpus += sim.capture_log();
    corpus += sim.event_log();
    auto secrets = sim.audit_secrets();
    secrets_checked += secrets.size();
    bytes_scanned += corpus.size();
    hits += secret_hits(corpus, secrets);
  }
  return {hits == 0 && secrets_checked > 0,
          fmt("%zu secrets (OTP secrets and every issued channel key) x raw/hex over %zu bytes of captures, "
              "snapshots, HSM files, API responses and event logs: %zu hits",
              secrets_checked, bytes_scanned, hits)};
}

Outcome determinism() {
  int identical = 0;
  int runs = 0;
  for (const char* file :
       {"steps_table1.jsonl", "group_channel.jsonl", "stolen_token.jsonl", "liveness.jsonl", "trust_boundary.jsonl"}) {
    for (std::uint64_t seed : {1ull, 42ull}) {
      ++runs;
      auto once = [&] {
        netsim::ScenarioRunner r(netsim::SimOptions{.seed = seed});
        r.run_file(scenario(file));
        return std::pair{r.sim().event_log(), r.sim().capture_log()};
      };
      if (once() == once()) ++identical;
    }
  }
  return {identical == runs, fmt("byte-identical event and capture logs in %d/%d (scenario, seed) pairs", identical,
                                 runs)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"table1-lifecycle", 1.0, table1},
      {"otp-suite", 10.0, otp_suite},
      {"group-channel", 5.0, group_channel},
      {"stolen-token", 5.0, stolen_token},
      {"trust-boundary", 30.0, trust_boundary},
      {"liveness", 0.0, liveness},
      {"secret-hygiene", 0.0, hygiene},
      {"determinism", 0.0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    auto start = std::chrono::steady_clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool in_time = c.limit_seconds == 0.0 || secs < c.limit_seconds;
    bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::string timing = c.limit_seconds == 0.0 ? fmt("%.3f s", secs) : fmt("%.3f s (< %.0f s)", secs, c.limit_seconds);
    std::cout << (pass ? "PASS " : "FAIL ") << c.name << " | " << o.detail << " | " << timing << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : fmt("%d criteria failed", failures)) << std::endl;
  return failures == 0 ? 0 : 1;
}
