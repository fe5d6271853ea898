#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tokengate {

// Every failure surfaced by the library. Names mirror the machine-readable
// codes printed by the CLI and returned by the HTTP API.
enum class Errc {
  // otp-core
  InvalidChar,
  OddLength,
  BadLength,
  BadFormat,
  BadCrc,
  // token-sim
  DuplicateSerial,
  AlreadyPlugged,
  NotPlugged,
  UnknownHandle,
  PublicIdMismatch,
  PrivateIdMismatch,
  CorruptStore,
  // registry
  NotIsolated,
  DuplicateId,
  TokenDecommissioned,
  RejectUnknownToken,
  RejectDecommissionedToken,
  RejectUnboundToken,
  RejectBadOtp,
  RejectReplay,
  RejectUnknownGateway,
  RejectChannelConflict,
  NotAMember,
  UnknownChannel,
  UnknownGateway,
  UnknownToken,
  UnknownEvent,
  NotRevertible,
  CorruptSnapshot,
  // mgmt-proto
  AuthFail,
  DecommissionedPeer,
  HandshakeReplay,
  IntegrityFail,
  ReplayedFrame,
  SessionClosed,
  MalformedMessage,
  // dataplane
  NoChannel,
  CounterExhausted,
  BadTag,
  Replay,
  UnknownKeyVersion,
  NotMember,
  MalformedFrame,
  // gateway-agent
  NoToken,
  NoSession,
  ChannelConflict,
  // netsim
  IsolatedLink,
  TokenNotPresent,
  UnknownLink,
  UnknownNode,
  // control-surface
  Usage,
  AssertionFailed,
  Io,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  explicit Error(Errc code, const std::string& detail = {});

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace tokengate
