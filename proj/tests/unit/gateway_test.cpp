#include <gtest/gtest.h>

#include <algorithm>

#include "tokengate/common/error.hpp"
#include "tokengate/gateway/agent.hpp"
#include "tokengate/netsim/simulation.hpp"

using namespace tokengate;
using namespace tokengate::gateway;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::Io;
}

struct Solo {
  DeterministicRandom rng{5};
  GatewayAgent agent{GatewayIdentity{"G1", crypto::dh_generate(rng), MacAddress::parse("02:00:00:00:00:01"),
                                     "10.0.1.1", crypto::dh_generate(rng).pub, "10.0.0.1"},
                     rng};

  mgmt::ChannelConfigBody config(const std::string& sec, std::uint32_t version) {
    mgmt::ChannelConfigBody c;
    c.sec_id = sec;
    c.key_version = version;
    c.key = mgmt::ChannelKey(rng.bytes<32>());
    c.own_sender_index = 1;
    c.members = {{MacAddress::parse("02:00:00:00:00:01"), 1}, {MacAddress::parse("02:00:00:00:00:02"), 2}};
    return c;
  }
};

bool contains(const std::string& hay, ByteView needle) {
  std::string n(needle.begin(), needle.end());
  return hay.find(n) != std::string::npos || hay.find(to_hex(needle)) != std::string::npos;
}

}  // namespace

TEST(Agent, FreshConfigMakesMemberAndGreen) {
  Solo s;
  EXPECT_EQ(s.agent.mode(), Mode::PassThrough);
  EXPECT_EQ(s.agent.led(0), Led::Off);
  s.agent.apply_channel_config(0, s.config("green", 1));
  EXPECT_EQ(s.agent.mode(), Mode::Member);
  EXPECT_EQ(s.agent.led(0), Led::Green);
  EXPECT_EQ(s.agent.status_line(0), "G1 member green 1 green 0");
}

TEST(Agent, SameConfigTwiceIsIdempotent) {
  Solo s;
  auto c = s.config("green", 1);
  s.agent.apply_channel_config(0, c);
  auto before = s.agent.status_line(0);
  auto key = s.agent.channel()->key();
  s.agent.apply_channel_config(0, c);
  EXPECT_EQ(s.agent.status_line(0), before);
  EXPECT_EQ(s.agent.channel()->key(), key);
  EXPECT_FALSE(s.agent.channel()->holds_previous_key());
}

TEST(Agent, MemberListOnlyUpdateKeepsKey) {
  Solo s;
  auto c = s.config("green", 1);
  s.agent.apply_channel_config(0, c);
  mgmt::ChannelUpdateBody u{"green", 1, std::nullopt, {c.members.front()}};
  s.agent.apply_channel_update(1, u);
  EXPECT_EQ(s.agent.channel()->key(), c.key);
  EXPECT_EQ(s.agent.channel()->members().size(), 1u);
}

TEST(Agent, ConflictingConfigRefused) {
  Solo s;
  s.agent.apply_channel_config(0, s.config("green", 1));
  EXPECT_EQ(code_of([&] { s.agent.apply_channel_config(0, s.config("blue", 1)); }), Errc::ChannelConflict);
  EXPECT_EQ(s.agent.sec_id(), "green");
}

TEST(Agent, TeardownZeroizesAndPassesThrough) {
  Solo s;
  auto c = s.config("green", 1);
  s.agent.apply_channel_config(0, c);
  s.agent.apply_teardown({"green"});
  EXPECT_EQ(s.agent.mode(), Mode::PassThrough);
  EXPECT_EQ(s.agent.led(0), Led::Off);
  EXPECT_EQ(s.agent.channel(), nullptr);
  EXPECT_FALSE(contains(s.agent.to_state().dump(), c.key.view()));
  EXPECT_EQ(s.agent.status_line(0), "G1 pass-through - - off 0");
}

TEST(Agent, TeardownWhilePassThroughIsAnomaly) {
  Solo s;
  s.agent.apply_teardown({"green"});
  EXPECT_EQ(s.agent.anomalies(), 1u);
  EXPECT_EQ(s.agent.mode(), Mode::PassThrough);
}

TEST(Agent, PressWithoutTokenOrSession) {
  Solo s;
  EXPECT_EQ(code_of([&] { s.agent.on_button_press(10); }), Errc::NoToken);
  EXPECT_EQ(s.agent.led(10), Led::Red);
  EXPECT_EQ(s.agent.led(10 + kErrorBlinkTicks), Led::Off);
  token::TokenDevice t("1", s.rng);
  s.agent.plug(t, 20);
  EXPECT_EQ(code_of([&] { s.agent.on_button_press(20); }), Errc::NoSession);
  EXPECT_EQ(t.use_counter(), 1u);
  EXPECT_EQ(t.session_counter(), 0u);
}

TEST(Agent, PassThroughIsByteIdentical) {
  Solo s;
  Bytes any = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 0x88, 0xE5, 0xFF};
  auto out = s.agent.from_endpoint(0, any);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.front(), any);
  EXPECT_EQ(s.agent.from_network(0, any), any);
}

TEST(Agent, StateFileRoundTrip) {
  Solo s;
  s.agent.connect(0);
  auto state = s.agent.to_state();
  auto back = GatewayAgent::from_state(state, s.rng);
  EXPECT_EQ(back.handshake_counter(), 1u);
  EXPECT_EQ(back.identity().static_key.pub, s.agent.identity().static_key.pub);
  EXPECT_EQ(back.to_state(), state);
}

// Behaviour against a live server through the simulator.
namespace {

struct Net {
  netsim::Simulation sim{netsim::SimOptions{.seed = 9}};
  Net() {
    sim.provision_gateway("G1");
    sim.provision_gateway("G2");
    sim.provision_token("T1", "green");
    sim.advance(5);
  }
};

}  // namespace

TEST(AgentLive, PressJoinsAndLedTurnsGreen) {
  Net n;
  n.sim.plug("T1", "G1");
  n.sim.press("G1");
  n.sim.advance(5);
  auto& g1 = n.sim.gateway("G1");
  EXPECT_EQ(g1.mode(), Mode::Member);
  EXPECT_EQ(g1.led(n.sim.now()), Led::Green);
  EXPECT_EQ(g1.sec_id(), "green");
}

TEST(AgentLive, DecommissionedTokenBlinksRedModeUnchanged) {
  Net n;
  n.sim.decommission_token("T1", false);
  n.sim.plug("T1", "G1");
  n.sim.press("G1");
  n.sim.advance(5);
  auto& g1 = n.sim.gateway("G1");
  EXPECT_EQ(g1.mode(), Mode::PassThrough);
  EXPECT_EQ(g1.led(n.sim.now()), Led::Red);
  EXPECT_EQ(g1.last_error(), "REJECT_DECOMMISSIONED_TOKEN");
}

TEST(AgentLive, HeartbeatsEveryInterval) {
  Net n;
  n.sim.advance(mgmt::kHeartbeatInterval * 3);
  auto& g1 = n.sim.gateway("G1");
  EXPECT_GE(g1.last_heartbeat(), mgmt::kHeartbeatInterval * 2);
  EXPECT_EQ(n.sim.registry().gateways().at("G1").status, registry::GatewayStatus::Online);
}

TEST(AgentLive, FailOperationalDuringServerOutage) {
  Net n;
  n.sim.plug("T1", "G1");
  n.sim.press("G1");
  n.sim.advance(5);
  n.sim.unplug("T1");
  n.sim.plug("T1", "G2");
  n.sim.press("G2");
  n.sim.advance(5);
  n.sim.silence("G1");
  n.sim.silence("G2");
  n.sim.advance(5000);
  n.sim.send("G1", "G2", Bytes{0xAB, 0xCD});
  n.sim.advance(5);
  ASSERT_EQ(n.sim.endpoint_inbox("G2").size(), 1u);
  EXPECT_EQ(n.sim.endpoint_inbox("G2").front().payload, (Bytes{0xAB, 0xCD}));
  EXPECT_EQ(n.sim.gateway("G1").mode(), Mode::Member);
}

TEST(AgentLive, InjectedConfigNeverApplied) {
  Net n;
  auto applied = n.sim.gateway("G1").configs_applied();
  // A config sealed under a session the attacker made up.
  DeterministicRandom rng(77);
  auto a = crypto::dh_generate(rng);
  auto b = crypto::dh_generate(rng);
  mgmt::HandshakeInitiator init(a, b.pub, 1, rng);
  auto acc = mgmt::accept_handshake(b, init.initiation(), 1, rng, [](auto&, auto) {});
  mgmt::ChannelConfigBody cfg;
  cfg.sec_id = "evil";
  cfg.key_version = 1;
  cfg.own_sender_index = 1;
  cfg.members = {{n.sim.gateway("G1").identity().macsec_address, 1}};
  auto frame = acc.session.seal(cfg);
  n.sim.adversary_inject("mgmt:G1", "G1", frame);
  n.sim.advance(3);
  EXPECT_EQ(n.sim.gateway("G1").configs_applied(), applied);
  EXPECT_EQ(n.sim.gateway("G1").rejections().at("INTEGRITY_FAIL"), 1u);
}
