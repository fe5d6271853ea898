#pragma once

#include <cstdint>
#include <optional>

#include "tokengate/common/bytes.hpp"

// Management wire format, version 1. A transport frame on a byte stream is a
// 4-byte big-endian length followed by that many body bytes. Every body
// starts with magic "TG", the version byte and a kind byte:
//
//   transport (kind 1..7):  magic[2] ver kind session_id:u32 sequence:u64
//                           nonce[12] ciphertext tag[16]
//   handshake init (0x10):  magic[2] ver kind sender_id:u32 ephemeral[32]
//                           enc_static[48] enc_payload[24]
//   handshake resp (0x11):  magic[2] ver kind sender_id:u32 receiver_id:u32
//                           ephemeral[32] enc_payload[16]
//   handshake reject (0x12): magic[2] ver kind receiver_id:u32 code:str16
//
// The transport header (everything before the ciphertext) is the AEAD
// associated data; the nonce is 4 zero bytes followed by the sequence.
namespace tokengate::mgmt::wire {

inline constexpr std::uint8_t kMagic0 = 'T';
inline constexpr std::uint8_t kMagic1 = 'G';
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::uint8_t kHandshakeInit = 0x10;
inline constexpr std::uint8_t kHandshakeResponse = 0x11;
inline constexpr std::uint8_t kHandshakeReject = 0x12;
inline constexpr std::size_t kTransportHeaderSize = 2 + 1 + 1 + 4 + 8 + 12;
inline constexpr std::size_t kMaxBodySize = 1 << 20;

struct Header {
  std::uint8_t kind = 0;
  // Receiver's session id for transport frames and responses; sender's id
  // for handshake initiations.
  std::uint32_t session_id = 0;
};

// Throws Error{MalformedMessage} on bad magic/version or truncation.
Header peek_header(ByteView body);

Bytes length_prefixed(ByteView body);

// Reassembles bodies from a byte stream.
class StreamDecoder {
 public:
  void feed(ByteView bytes);
  // Throws Error{MalformedMessage} when a length prefix exceeds kMaxBodySize.
  std::optional<Bytes> next();

 private:
  Bytes buffer_;
};

}  // namespace tokengate::mgmt::wire
