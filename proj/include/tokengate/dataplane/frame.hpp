#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "tokengate/common/bytes.hpp"
#include "tokengate/common/mac_address.hpp"
#include "tokengate/mgmt/message.hpp"

// Frame protection among channel members.
//
// ProtectedFrame layout (all integers big-endian):
//
//   offset  size  field
//        0     6  outer dst (receiving member's MACsec address)
//        6     6  outer src (sending member's MACsec address)
//       12     2  ether type 0x88E5
//       14     4  secID hash: first 4 bytes of SHA-256(secID)
//       18     4  key version
//       22     4  sender index
//       26     8  frame counter
//       34     n  ChaCha20-Poly1305 ciphertext of the serialized inner frame
//     34+n    16  tag
//
// The 34-byte header is the associated data. The nonce is
// sender index (4) || frame counter (8).
namespace tokengate::dataplane {

inline constexpr std::uint16_t kProtectedEtherType = 0x88E5;
inline constexpr std::size_t kMaxPayload = 1500;
inline constexpr std::size_t kFrameHeaderSize = 14;
inline constexpr std::size_t kProtectedHeaderSize = 34;
inline constexpr std::uint64_t kMaxFrameCounter = ~std::uint64_t{0};

struct Frame {
  MacAddress dst;
  MacAddress src;
  std::uint16_t ether_type = 0;
  Bytes payload;

  // Throws Error{MalformedFrame} for an oversize payload.
  Bytes serialize() const;
  // Throws Error{MalformedFrame}.
  static Frame parse(ByteView bytes);
  friend bool operator==(const Frame&, const Frame&) = default;
};

struct ProtectedHeader {
  MacAddress dst;
  MacAddress src;
  std::uint32_t sec_id_hash = 0;
  std::uint32_t key_version = 0;
  std::uint32_t sender_index = 0;
  std::uint64_t frame_counter = 0;
};

std::uint32_t sec_id_hash(std::string_view sec_id);
bool is_protected(ByteView frame);
// Throws Error{MalformedFrame}.
ProtectedHeader parse_protected_header(ByteView frame);
// Decrypts with an explicit key, ignoring all state. Used by audits that ask
// whether a given key opens a frame.
std::optional<Frame> open_with_key(const mgmt::ChannelKey& key, ByteView frame);

// Per-gateway state of one secure channel.
class ChannelState {
 public:
  // self is this gateway's MACsec address; it must be in config.members.
  ChannelState(const mgmt::ChannelConfigBody& config, MacAddress self);

  const std::string& sec_id() const { return sec_id_; }
  std::uint32_t key_version() const { return key_version_; }
  std::uint32_t sender_index() const { return sender_index_; }
  const std::vector<mgmt::MemberInfo>& members() const { return members_; }
  const mgmt::ChannelKey& key() const { return key_; }
  // Other members' MACsec addresses, in member-list order.
  std::vector<MacAddress> peers() const;
  bool holds_previous_key() const { return previous_.has_value(); }

  // Same secID. A new key_version installs the key for sending at once and
  // keeps the old one for receiving until now + 1.
  void apply_update(std::uint64_t now, const mgmt::ChannelUpdateBody& update);
  // Full replacement from a ChannelConfig for the same secID.
  void apply_config(std::uint64_t now, const mgmt::ChannelConfigBody& config);

  // Throws Error{CounterExhausted}.
  Bytes protect(const Frame& inner, const MacAddress& dst);
  // Throws Error{MalformedFrame}, Error{NoChannel} (other secID),
  // Error{UnknownKeyVersion}, Error{NotMember} (unknown sender),
  // Error{BadTag} or Error{Replay}.
  Frame deprotect(std::uint64_t now, ByteView frame);

  // Test hook for counter exhaustion.
  void set_frame_counter(std::uint64_t next) { next_counter_ = next; }
  // Drops the previous key once its overlap window has passed.
  void expire(std::uint64_t now);
  // Zeroizes all key material.
  void wipe();

 private:
  struct OldKey {
    std::uint32_t version;
    mgmt::ChannelKey key;
    std::uint64_t valid_until;
  };

  std::string sec_id_;
  std::uint32_t sec_hash_;
  MacAddress self_;
  std::uint32_t key_version_;
  mgmt::ChannelKey key_;
  std::optional<OldKey> previous_;
  std::uint32_t sender_index_ = 0;
  std::vector<mgmt::MemberInfo> members_;
  std::uint64_t next_counter_ = 1;
  bool exhausted_ = false;
  // (key version, sender index) -> highest accepted counter.
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> replay_;
};

}  // namespace tokengate::dataplane
