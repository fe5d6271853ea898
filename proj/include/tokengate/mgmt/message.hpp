#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tokengate/common/bytes.hpp"
#include "tokengate/common/mac_address.hpp"

namespace tokengate::mgmt {

using ChannelKey = SecretArray<32>;

enum class MessageKind : std::uint8_t {
  TokenEvent = 1,
  ChannelConfig = 2,
  ChannelUpdate = 3,
  ChannelTeardown = 4,
  Heartbeat = 5,
  Ack = 6,
  Error = 7,
};

std::string_view to_string(MessageKind kind);

struct MemberInfo {
  MacAddress macsec_address;
  std::uint32_t sender_index = 0;
  friend bool operator==(const MemberInfo&, const MemberInfo&) = default;
};

struct TokenEventBody {
  std::string serial;
  std::string otp;
  friend bool operator==(const TokenEventBody&, const TokenEventBody&) = default;
};

// Full channel state for a gateway entering a channel. members includes the
// recipient itself.
struct ChannelConfigBody {
  std::string sec_id;
  std::uint32_t key_version = 0;
  ChannelKey key;
  std::uint32_t own_sender_index = 0;
  std::vector<MemberInfo> members;
  friend bool operator==(const ChannelConfigBody&, const ChannelConfigBody&) = default;
};

// Carries a key only when key_version moved.
struct ChannelUpdateBody {
  std::string sec_id;
  std::uint32_t key_version = 0;
  std::optional<ChannelKey> key;
  std::vector<MemberInfo> members;
  friend bool operator==(const ChannelUpdateBody&, const ChannelUpdateBody&) = default;
};

struct ChannelTeardownBody {
  std::string sec_id;
  friend bool operator==(const ChannelTeardownBody&, const ChannelTeardownBody&) = default;
};

struct HeartbeatBody {
  std::uint64_t time = 0;
  friend bool operator==(const HeartbeatBody&, const HeartbeatBody&) = default;
};

struct AckBody {
  std::uint64_t acked_sequence = 0;
  friend bool operator==(const AckBody&, const AckBody&) = default;
};

struct ErrorBody {
  std::uint64_t acked_sequence = 0;
  std::string code;
  std::string detail;
  friend bool operator==(const ErrorBody&, const ErrorBody&) = default;
};

using MessageBody = std::variant<TokenEventBody, ChannelConfigBody, ChannelUpdateBody,
                                 ChannelTeardownBody, HeartbeatBody, AckBody, ErrorBody>;

MessageKind kind_of(const MessageBody& body);

struct ManagementMessage {
  std::uint32_t session_id = 0;
  std::uint64_t sequence = 0;
  MessageBody body;

  MessageKind kind() const { return kind_of(body); }
};

// Plaintext body codec (the part that travels inside the AEAD envelope).
// decode_body throws Error{MalformedMessage}.
Bytes encode_body(const MessageBody& body);
MessageBody decode_body(MessageKind kind, ByteView bytes);

}  // namespace tokengate::mgmt
