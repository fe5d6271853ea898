#include "tokengate/common/error.hpp"

namespace tokengate {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidChar: return "INVALID_CHAR";
    case Errc::OddLength: return "ODD_LENGTH";
    case Errc::BadLength: return "BAD_LENGTH";
    case Errc::BadFormat: return "BAD_FORMAT";
    case Errc::BadCrc: return "BAD_CRC";
    case Errc::DuplicateSerial: return "DUPLICATE_SERIAL";
    case Errc::AlreadyPlugged: return "ALREADY_PLUGGED";
    case Errc::NotPlugged: return "NOT_PLUGGED";
    case Errc::UnknownHandle: return "UNKNOWN_HANDLE";
    case Errc::PublicIdMismatch: return "PUBLIC_ID_MISMATCH";
    case Errc::PrivateIdMismatch: return "PRIVATE_ID_MISMATCH";
    case Errc::CorruptStore: return "CORRUPT_STORE";
    case Errc::NotIsolated: return "NOT_ISOLATED";
    case Errc::DuplicateId: return "DUPLICATE_ID";
    case Errc::TokenDecommissioned: return "TOKEN_DECOMMISSIONED";
    case Errc::RejectUnknownToken: return "REJECT_UNKNOWN_TOKEN";
    case Errc::RejectDecommissionedToken: return "REJECT_DECOMMISSIONED_TOKEN";
    case Errc::RejectUnboundToken: return "REJECT_UNBOUND_TOKEN";
    case Errc::RejectBadOtp: return "REJECT_BAD_OTP";
    case Errc::RejectReplay: return "REJECT_REPLAY";
    case Errc::RejectUnknownGateway: return "REJECT_UNKNOWN_GATEWAY";
    case Errc::RejectChannelConflict: return "REJECT_CHANNEL_CONFLICT";
    case Errc::NotAMember: return "NOT_A_MEMBER";
    case Errc::UnknownChannel: return "UNKNOWN_CHANNEL";
    case Errc::UnknownGateway: return "UNKNOWN_GATEWAY";
    case Errc::UnknownToken: return "UNKNOWN_TOKEN";
    case Errc::UnknownEvent: return "UNKNOWN_EVENT";
    case Errc::NotRevertible: return "NOT_REVERTIBLE";
    case Errc::CorruptSnapshot: return "CORRUPT_SNAPSHOT";
    case Errc::AuthFail: return "AUTH_FAIL";
    case Errc::DecommissionedPeer: return "DECOMMISSIONED_PEER";
    case Errc::HandshakeReplay: return "HANDSHAKE_REPLAY";
    case Errc::IntegrityFail: return "INTEGRITY_FAIL";
    case Errc::ReplayedFrame: return "REPLAYED_FRAME";
    case Errc::SessionClosed: return "SESSION_CLOSED";
    case Errc::MalformedMessage: return "MALFORMED_MESSAGE";
    case Errc::NoChannel: return "NO_CHANNEL";
    case Errc::CounterExhausted: return "COUNTER_EXHAUSTED";
    case Errc::BadTag: return "BAD_TAG";
    case Errc::Replay: return "REPLAY";
    case Errc::UnknownKeyVersion: return "UNKNOWN_KEY_VERSION";
    case Errc::NotMember: return "NOT_MEMBER";
    case Errc::MalformedFrame: return "MALFORMED_FRAME";
    case Errc::NoToken: return "NO_TOKEN";
    case Errc::NoSession: return "NO_SESSION";
    case Errc::ChannelConflict: return "CHANNEL_CONFLICT";
    case Errc::IsolatedLink: return "ISOLATED_LINK";
    case Errc::TokenNotPresent: return "TOKEN_NOT_PRESENT";
    case Errc::UnknownLink: return "UNKNOWN_LINK";
    case Errc::UnknownNode: return "UNKNOWN_NODE";
    case Errc::Usage: return "USAGE";
    case Errc::AssertionFailed: return "ASSERTION_FAILED";
    case Errc::Io: return "IO";
  }
  return "UNKNOWN";
}

namespace {

std::string format_message(Errc code, const std::string& detail) {
  std::string msg{to_string(code)};
  if (!detail.empty()) {
    msg += ": ";
    msg += detail;
  }
  return msg;
}

}  // namespace

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(format_message(code, detail)), code_(code) {}

}  // namespace tokengate
