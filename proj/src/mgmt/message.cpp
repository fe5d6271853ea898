#include "tokengate/mgmt/message.hpp"

#include "tokengate/common/error.hpp"

namespace tokengate::mgmt {

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::TokenEvent: return "TokenEvent";
    case MessageKind::ChannelConfig: return "ChannelConfig";
    case MessageKind::ChannelUpdate: return "ChannelUpdate";
    case MessageKind::ChannelTeardown: return "ChannelTeardown";
    case MessageKind::Heartbeat: return "Heartbeat";
    case MessageKind::Ack: return "Ack";
    case MessageKind::Error: return "Error";
  }
  return "Unknown";
}

MessageKind kind_of(const MessageBody& body) {
  return static_cast<MessageKind>(body.index() + 1);
}

namespace {

void put_members(ByteWriter& w, const std::vector<MemberInfo>& members) {
  w.u16_be(static_cast<std::uint16_t>(members.size()));
  for (const auto& m : members) {
    w.raw(m.macsec_address.bytes);
    w.u32_be(m.sender_index);
  }
}

std::vector<MemberInfo> get_members(ByteReader& r) {
  std::vector<MemberInfo> out(r.u16_be());
  for (auto& m : out) {
    m.macsec_address.bytes = r.array<6>();
    m.sender_index = r.u32_be();
  }
  return out;
}

ChannelKey get_key(ByteReader& r) { return ChannelKey(r.array<32>()); }

struct Encoder {
  ByteWriter& w;
  void operator()(const TokenEventBody& b) const {
    w.str16(b.serial);
    w.str16(b.otp);
  }
  void operator()(const ChannelConfigBody& b) const {
    w.str16(b.sec_id);
    w.u32_be(b.key_version);
    w.raw(b.key.view());
    w.u32_be(b.own_sender_index);
    put_members(w, b.members);
  }
  void operator()(const ChannelUpdateBody& b) const {
    w.str16(b.sec_id);
    w.u32_be(b.key_version);
    w.u8(b.key ? 1 : 0);
    if (b.key) w.raw(b.key->view());
    put_members(w, b.members);
  }
  void operator()(const ChannelTeardownBody& b) const { w.str16(b.sec_id); }
  void operator()(const HeartbeatBody& b) const { w.u64_be(b.time); }
  void operator()(const AckBody& b) const { w.u64_be(b.acked_sequence); }
  void operator()(const ErrorBody& b) const {
    w.u64_be(b.acked_sequence);
    w.str16(b.code);
    w.str16(b.detail);
  }
};

}  // namespace

Bytes encode_body(const MessageBody& body) {
  ByteWriter w;
  std::visit(Encoder{w}, body);
  return std::move(w).take();
}

MessageBody decode_body(MessageKind kind, ByteView bytes) {
  ByteReader r(bytes, Errc::MalformedMessage);
  MessageBody out;
  switch (kind) {
    case MessageKind::TokenEvent: {
      TokenEventBody b;
      b.serial = r.str16();
      b.otp = r.str16();
      out = std::move(b);
      break;
    }
    case MessageKind::ChannelConfig: {
      ChannelConfigBody b;
      b.sec_id = r.str16();
      b.key_version = r.u32_be();
      b.key = get_key(r);
      b.own_sender_index = r.u32_be();
      b.members = get_members(r);
      out = std::move(b);
      break;
    }
    case MessageKind::ChannelUpdate: {
      ChannelUpdateBody b;
      b.sec_id = r.str16();
      b.key_version = r.u32_be();
      auto has_key = r.u8();
      if (has_key > 1) throw Error(Errc::MalformedMessage, "bad key flag");
      if (has_key) b.key = get_key(r);
      b.members = get_members(r);
      out = std::move(b);
      break;
    }
    case MessageKind::ChannelTeardown:
      out = ChannelTeardownBody{r.str16()};
      break;
    case MessageKind::Heartbeat:
      out = HeartbeatBody{r.u64_be()};
      break;
    case MessageKind::Ack:
      out = AckBody{r.u64_be()};
      break;
    case MessageKind::Error: {
      ErrorBody b;
      b.acked_sequence = r.u64_be();
      b.code = r.str16();
      b.detail = r.str16();
      out = std::move(b);
      break;
    }
    default:
      throw Error(Errc::MalformedMessage, "unknown message kind");
  }
  if (!r.empty()) throw Error(Errc::MalformedMessage, "trailing bytes");
  return out;
}

}  // namespace tokengate::mgmt
