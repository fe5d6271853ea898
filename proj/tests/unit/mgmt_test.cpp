#include <gtest/gtest.h>

#include "tokengate/common/error.hpp"
#include "tokengate/mgmt/session.hpp"
#include "tokengate/mgmt/wire.hpp"
#include "tokengate/server/management_server.hpp"

using namespace tokengate;
using namespace tokengate::mgmt;

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

struct Pair {
  DeterministicRandom rng{7};
  crypto::DhKeyPair server = crypto::dh_generate(rng);
  crypto::DhKeyPair gateway = crypto::dh_generate(rng);
};

std::pair<Session, Session> establish(Pair& p, std::uint64_t counter = 1) {
  HandshakeInitiator init(p.gateway, p.server.pub, counter, p.rng);
  auto accepted = accept_handshake(p.server, init.initiation(), 99, p.rng,
                                   [](const crypto::DhPublic&, std::uint64_t) {});
  auto client = init.complete(accepted.response);
  return {std::move(client), std::move(accepted.session)};
}

std::vector<MessageBody> one_of_each() {
  ChannelConfigBody cfg;
  cfg.sec_id = "green";
  cfg.key_version = 3;
  cfg.key = ChannelKey(ByteArray<32>{1, 2, 3, 4, 5});
  cfg.own_sender_index = 2;
  cfg.members = {{MacAddress::parse("02:00:00:00:00:01"), 1}, {MacAddress::parse("02:00:00:00:00:02"), 2}};
  ChannelUpdateBody upd;
  upd.sec_id = "green";
  upd.key_version = 4;
  upd.key = ChannelKey(ByteArray<32>{9, 9, 9});
  upd.members = cfg.members;
  ChannelUpdateBody upd_no_key = upd;
  upd_no_key.key.reset();
  return {
      TokenEventBody{"4711", std::string(44, 'c')},
      cfg,
      upd,
      upd_no_key,
      ChannelTeardownBody{"green"},
      HeartbeatBody{123456789},
      AckBody{42},
      ErrorBody{43, "REJECT_REPLAY", "counter did not advance"},
  };
}

}  // namespace

TEST(Codec, EveryKindRoundTrips) {
  for (const auto& body : one_of_each()) {
    auto bytes = encode_body(body);
    EXPECT_EQ(decode_body(kind_of(body), bytes), body);
  }
}

TEST(Codec, TruncationAndTrailingBytesRejected) {
  for (const auto& body : one_of_each()) {
    auto bytes = encode_body(body);
    auto longer = bytes;
    longer.push_back(0);
    EXPECT_EQ(code_of([&] { decode_body(kind_of(body), longer); }), Errc::MalformedMessage);
    if (!bytes.empty()) {
      Bytes shorter(bytes.begin(), bytes.end() - 1);
      EXPECT_EQ(code_of([&] { decode_body(kind_of(body), shorter); }), Errc::MalformedMessage);
    }
  }
}

TEST(Handshake, SizesMatchDocumentedLayout) {
  Pair p;
  HandshakeInitiator init(p.gateway, p.server.pub, 1, p.rng);
  EXPECT_EQ(init.initiation().size(), 8u + 32 + 48 + 24);
  auto accepted = accept_handshake(p.server, init.initiation(), 5, p.rng, [](auto&, auto) {});
  EXPECT_EQ(accepted.response.size(), 12u + 32 + 16);
  EXPECT_EQ(accepted.initiator_static, p.gateway.pub);
  EXPECT_EQ(accepted.counter, 1u);
}

TEST(Handshake, SessionsCarryEveryKindBothWays) {
  Pair p;
  auto [client, server] = establish(p);
  for (const auto& body : one_of_each()) {
    auto up = client.seal(body);
    EXPECT_EQ(server.open(up).body, body);
    auto down = server.seal(body);
    auto msg = client.open(down);
    EXPECT_EQ(msg.body, body);
    EXPECT_EQ(msg.sequence, server.last_sent());
  }
}

TEST(Handshake, WrongResponderKeyFails) {
  Pair p;
  auto other = crypto::dh_generate(p.rng);
  HandshakeInitiator init(p.gateway, other.pub, 1, p.rng);
  EXPECT_EQ(code_of([&] { accept_handshake(p.server, init.initiation(), 1, p.rng, [](auto&, auto) {}); }),
            Errc::AuthFail);
}

TEST(Handshake, TamperedResponseFails) {
  Pair p;
  HandshakeInitiator init(p.gateway, p.server.pub, 1, p.rng);
  auto accepted = accept_handshake(p.server, init.initiation(), 1, p.rng, [](auto&, auto) {});
  accepted.response.back() ^= 1;
  EXPECT_EQ(code_of([&] { init.complete(accepted.response); }), Errc::AuthFail);
}

TEST(Handshake, RejectionsMapToCodes) {
  Pair p;
  HandshakeInitiator a(p.gateway, p.server.pub, 1, p.rng);
  EXPECT_EQ(code_of([&] { a.complete(handshake_reject(a.local_id(), "DECOMMISSIONED_PEER")); }),
            Errc::DecommissionedPeer);
  EXPECT_EQ(code_of([&] { a.complete(handshake_reject(a.local_id(), "AUTH_FAIL")); }), Errc::AuthFail);
}

TEST(Handshake, FreshKeysPerSession) {
  Pair p;
  auto [c1, s1] = establish(p, 1);
  auto [c2, s2] = establish(p, 2);
  auto frame = c1.seal(HeartbeatBody{1});
  EXPECT_EQ(code_of([&] { s2.open(frame); }), Errc::IntegrityFail);
}

TEST(Transport, BitFlipIsIntegrityFail) {
  Pair p;
  auto [client, server] = establish(p);
  auto frame = client.seal(TokenEventBody{"1", "x"});
  for (std::size_t bit = 0; bit < frame.size() * 8; ++bit) {
    auto bad = frame;
    bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    auto code = code_of([&] { server.open(bad); });
    EXPECT_TRUE(code == Errc::IntegrityFail || code == Errc::MalformedMessage) << bit << " " << to_string(code);
  }
  EXPECT_NO_THROW(server.open(frame));
}

TEST(Transport, ReinjectionIsReplayedFrame) {
  Pair p;
  auto [client, server] = establish(p);
  auto f1 = client.seal(HeartbeatBody{1});
  auto f2 = client.seal(HeartbeatBody{2});
  server.open(f1);
  server.open(f2);
  EXPECT_EQ(code_of([&] { server.open(f1); }), Errc::ReplayedFrame);
  EXPECT_EQ(code_of([&] { server.open(f2); }), Errc::ReplayedFrame);
  EXPECT_EQ(server.last_received(), 2u);
}

TEST(Transport, OutOfOrderRejected) {
  Pair p;
  auto [client, server] = establish(p);
  auto f1 = client.seal(HeartbeatBody{1});
  auto f2 = client.seal(HeartbeatBody{2});
  server.open(f2);
  EXPECT_EQ(code_of([&] { server.open(f1); }), Errc::ReplayedFrame);
}

TEST(Transport, ClosedSession) {
  Pair p;
  auto [client, server] = establish(p);
  auto f = client.seal(HeartbeatBody{1});
  server.close();
  EXPECT_EQ(code_of([&] { server.open(f); }), Errc::SessionClosed);
  EXPECT_EQ(code_of([&] { server.seal(HeartbeatBody{1}); }), Errc::SessionClosed);
}

TEST(Wire, StreamDecoderReassembles) {
  Bytes stream;
  for (std::size_t n : {0u, 1u, 300u}) {
    auto framed = wire::length_prefixed(Bytes(n, static_cast<std::uint8_t>(n)));
    stream.insert(stream.end(), framed.begin(), framed.end());
  }
  wire::StreamDecoder dec;
  std::vector<Bytes> got;
  for (auto b : stream) {
    dec.feed(ByteView(&b, 1));
    while (auto body = dec.next()) got.push_back(*body);
  }
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(got[2], Bytes(300, 44));
  wire::StreamDecoder big;
  Bytes huge = {0x7F, 0xFF, 0xFF, 0xFF};
  big.feed(huge);
  EXPECT_EQ(code_of([&] { big.next(); }), Errc::MalformedMessage);
}

// Server endpoint against real registry state.
namespace {

struct ServerBench {
  DeterministicRandom rng{11};
  token::HsmStore hsm{token::MasterKey(rng.bytes<32>())};
  registry::Registry reg{registry::ServerIdentity{crypto::dh_generate(rng), "10.0.0.1"}, hsm, rng};
  server::ManagementServer srv{reg, rng};
  crypto::DhKeyPair gw_key = crypto::dh_generate(rng);

  ServerBench() {
    reg.provision_gateway(registry::LinkKind::Isolated,
                          {"G1", gw_key.pub, "10.0.1.1", MacAddress::parse("02:00:00:00:00:01")});
  }

  std::optional<Session> connect(const crypto::DhKeyPair& key, std::uint64_t counter, Errc* failure = nullptr) {
    HandshakeInitiator init(key, reg.identity().static_key.pub, counter, rng);
    auto out = srv.receive(0, 1, init.initiation());
    EXPECT_FALSE(out.empty());
    try {
      return init.complete(out.front().body);
    } catch (const Error& e) {
      if (failure) *failure = e.code();
      return std::nullopt;
    }
  }
};

}  // namespace

TEST(Server, ProvisionedGatewayConnects) {
  ServerBench b;
  auto s = b.connect(b.gw_key, 1);
  ASSERT_TRUE(s);
  EXPECT_EQ(b.srv.gateway_on(1), "G1");
  EXPECT_EQ(b.reg.gateways().at("G1").status, registry::GatewayStatus::Online);
}

TEST(Server, UnprovisionedPeerAuthFail) {
  ServerBench b;
  auto self_made = crypto::dh_generate(b.rng);
  Errc code = Errc::Io;
  EXPECT_FALSE(b.connect(self_made, 1, &code));
  EXPECT_EQ(code, Errc::AuthFail);
  EXPECT_FALSE(b.srv.gateway_on(1));
  EXPECT_EQ(b.srv.rejections().at("AUTH_FAIL"), 1u);
}

TEST(Server, DecommissionedPeerRefused) {
  ServerBench b;
  b.reg.decommission_gateway(0, "operator", "G1");
  Errc code = Errc::Io;
  EXPECT_FALSE(b.connect(b.gw_key, 1, &code));
  EXPECT_EQ(code, Errc::DecommissionedPeer);
}

TEST(Server, RecordedHandshakeReplayYieldsNothing) {
  ServerBench b;
  HandshakeInitiator init(b.gw_key, b.reg.identity().static_key.pub, 1, b.rng);
  auto first = b.srv.receive(0, 1, init.initiation());
  auto session = init.complete(first.front().body);
  auto replay = b.srv.receive(5, 2, init.initiation());
  ASSERT_EQ(replay.size(), 1u);
  EXPECT_EQ(wire::peek_header(replay.front().body).kind, wire::kHandshakeReject);
  EXPECT_EQ(b.srv.rejections().at("HANDSHAKE_REPLAY"), 1u);
  EXPECT_FALSE(b.srv.gateway_on(2));
  EXPECT_EQ(b.srv.gateway_on(1), "G1");
}

TEST(Server, TokenEventAnsweredWithErrorCode) {
  ServerBench b;
  auto s = b.connect(b.gw_key, 1);
  auto out = b.srv.receive(1, 1, s->seal(TokenEventBody{"nope", std::string(44, 'c')}));
  ASSERT_EQ(out.size(), 1u);
  auto reply = s->open(out.front().body);
  auto* err = std::get_if<ErrorBody>(&reply.body);
  ASSERT_NE(err, nullptr);
  EXPECT_EQ(err->code, "REJECT_UNKNOWN_TOKEN");
  EXPECT_EQ(err->acked_sequence, 1u);
}

TEST(Server, PlaintextAndForgedFramesIgnored) {
  ServerBench b;
  auto s = b.connect(b.gw_key, 1);
  auto events = b.reg.events().size();
  auto frame = s->seal(TokenEventBody{"x", "y"});
  frame[frame.size() - 20] ^= 0x10;
  EXPECT_TRUE(b.srv.receive(1, 1, frame).empty());
  EXPECT_TRUE(b.srv.receive(1, 1, Bytes{1, 2, 3}).empty());
  EXPECT_TRUE(b.srv.receive(1, 7, s->seal(HeartbeatBody{1})).empty());
  EXPECT_EQ(b.reg.events().size(), events);
  EXPECT_EQ(b.srv.rejections().at("INTEGRITY_FAIL"), 1u);
  EXPECT_EQ(b.srv.rejections().at("MALFORMED_MESSAGE"), 1u);
  EXPECT_EQ(b.srv.rejections().at("SESSION_CLOSED"), 1u);
}
