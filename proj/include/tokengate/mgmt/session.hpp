#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "tokengate/common/crypto.hpp"
#include "tokengate/mgmt/message.hpp"

namespace tokengate::mgmt {

// Virtual-time liveness parameters (1 tick = 1 ms).
inline constexpr std::uint64_t kHeartbeatInterval = 1000;
inline constexpr std::uint64_t kOfflineThreshold = 3 * kHeartbeatInterval;

// One authenticated management session. Sequence numbers start at 1 in each
// direction; received sequences must strictly increase.
class Session {
 public:
  Session(std::uint32_t local_id, std::uint32_t remote_id, crypto::AeadKey send_key,
          crypto::AeadKey recv_key);

  std::uint32_t local_id() const { return local_id_; }
  std::uint32_t remote_id() const { return remote_id_; }
  bool closed() const { return closed_; }
  std::uint64_t last_sent() const { return send_seq_; }
  std::uint64_t last_received() const { return recv_seq_; }

  // Encrypts body under the next sequence number; returns the frame body.
  // Throws Error{SessionClosed}.
  Bytes seal(const MessageBody& body);
  // Throws Error{SessionClosed}, Error{MalformedMessage},
  // Error{IntegrityFail} or Error{ReplayedFrame}.
  ManagementMessage open(ByteView frame_body);

  // Erases key material; later seal/open fail with SessionClosed.
  void close();

 private:
  std::uint32_t local_id_;
  std::uint32_t remote_id_;
  crypto::AeadKey send_key_;
  crypto::AeadKey recv_key_;
  std::uint64_t send_seq_ = 0;
  std::uint64_t recv_seq_ = 0;
  bool closed_ = false;
};

// Initiator half of the handshake (gateway side). Pattern: Noise IK with
// X25519, ChaCha20-Poly1305 and SHA-256. The initiation payload carries a
// strictly increasing counter so a recorded initiation cannot be replayed.
class HandshakeInitiator {
 public:
  HandshakeInitiator(const crypto::DhKeyPair& local_static, const crypto::DhPublic& remote_static,
                     std::uint64_t counter, RandomSource& rng);
  ~HandshakeInitiator();
  HandshakeInitiator(HandshakeInitiator&&) noexcept;
  HandshakeInitiator& operator=(HandshakeInitiator&&) noexcept;

  std::uint32_t local_id() const;
  // Frame body of the initiation message.
  const Bytes& initiation() const;
  // Throws Error{AuthFail} when the response does not authenticate, or
  // Error{AuthFail}/Error{DecommissionedPeer} when the responder rejected.
  Session complete(ByteView response_body);

 private:
  struct State;
  std::unique_ptr<State> state_;
};

struct AcceptedHandshake {
  Session session;
  crypto::DhPublic initiator_static{};
  std::uint64_t counter = 0;
  Bytes response;
};

// Responder half (server side). authorize runs after the initiator's static
// key and counter are authenticated and before any response is produced; it
// throws to refuse the peer.
AcceptedHandshake accept_handshake(
    const crypto::DhKeyPair& local_static, ByteView initiation_body, std::uint32_t local_id,
    RandomSource& rng, const std::function<void(const crypto::DhPublic&, std::uint64_t)>& authorize);

// Unauthenticated refusal hint sent back to an initiator.
Bytes handshake_reject(std::uint32_t receiver_id, std::string_view code);

}  // namespace tokengate::mgmt
