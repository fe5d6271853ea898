#include "tokengate/mgmt/session.hpp"

#include <cstring>

#include "tokengate/common/error.hpp"
#include "tokengate/mgmt/wire.hpp"

namespace tokengate::mgmt {

namespace {

constexpr std::string_view kProtocolName = "Noise_IK_25519_ChaChaPoly_SHA256";
constexpr std::string_view kPrologue = "tokengate-mgmt-v1";

ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

crypto::AeadNonce noise_nonce(std::uint64_t n) {
  crypto::AeadNonce nonce{};
  for (int i = 0; i < 8; ++i) nonce[4 + i] = static_cast<std::uint8_t>(n >> (8 * i));
  return nonce;
}

crypto::AeadNonce transport_nonce(std::uint64_t seq) {
  crypto::AeadNonce nonce{};
  for (int i = 0; i < 8; ++i) nonce[4 + i] = static_cast<std::uint8_t>(seq >> (56 - 8 * i));
  return nonce;
}

// Noise SymmetricState over SHA-256.
class SymmetricState {
 public:
  SymmetricState() {
    static_assert(kProtocolName.size() == 32);
    std::memcpy(h_.data(), kProtocolName.data(), 32);
    ck_ = h_;
    mix_hash(as_bytes(kPrologue));
  }
  ~SymmetricState() {
    secure_zero(ck_);
    secure_zero(h_);
  }

  void mix_hash(ByteView data) {
    Bytes buf(h_.begin(), h_.end());
    buf.insert(buf.end(), data.begin(), data.end());
    h_ = crypto::sha256(buf);
  }

  void mix_key(ByteView ikm) {
    auto [ck, k] = crypto::hkdf2(ck_, ikm);
    ck_ = ck;
    key_ = crypto::AeadKey(k);
    secure_zero(k);
    has_key_ = true;
    n_ = 0;
  }

  Bytes encrypt_and_hash(ByteView plaintext) {
    Bytes out = has_key_ ? crypto::aead_seal(key_, noise_nonce(n_++), h_, plaintext)
                         : Bytes(plaintext.begin(), plaintext.end());
    mix_hash(out);
    return out;
  }

  Bytes decrypt_and_hash(ByteView ciphertext) {
    Bytes out;
    if (has_key_) {
      auto pt = crypto::aead_open(key_, noise_nonce(n_++), h_, ciphertext);
      if (!pt) throw Error(Errc::AuthFail, "handshake message does not authenticate");
      out = std::move(*pt);
    } else {
      out.assign(ciphertext.begin(), ciphertext.end());
    }
    mix_hash(ciphertext);
    return out;
  }

  std::pair<crypto::AeadKey, crypto::AeadKey> split() {
    auto [k1, k2] = crypto::hkdf2(ck_, ByteView{});
    std::pair<crypto::AeadKey, crypto::AeadKey> out{crypto::AeadKey(k1), crypto::AeadKey(k2)};
    secure_zero(k1);
    secure_zero(k2);
    return out;
  }

 private:
  crypto::Digest ck_{};
  crypto::Digest h_{};
  crypto::AeadKey key_;
  bool has_key_ = false;
  std::uint64_t n_ = 0;
};

void put_header(ByteWriter& w, std::uint8_t kind) {
  w.u8(wire::kMagic0);
  w.u8(wire::kMagic1);
  w.u8(wire::kVersion);
  w.u8(kind);
}

ByteArray<4> be32(std::uint32_t v) {
  return {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
          static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
}

void mix_dh(SymmetricState& ss, const crypto::DhPrivate& priv, const crypto::DhPublic& pub) {
  auto shared = crypto::dh(priv, pub);
  ss.mix_key(shared.view());
}

}  // namespace

// ---------------------------------------------------------------------------

Session::Session(std::uint32_t local_id, std::uint32_t remote_id, crypto::AeadKey send_key,
                 crypto::AeadKey recv_key)
    : local_id_(local_id), remote_id_(remote_id), send_key_(std::move(send_key)),
      recv_key_(std::move(recv_key)) {}

Bytes Session::seal(const MessageBody& body) {
  if (closed_) throw Error(Errc::SessionClosed);
  std::uint64_t seq = ++send_seq_;
  auto nonce = transport_nonce(seq);
  ByteWriter w;
  put_header(w, static_cast<std::uint8_t>(kind_of(body)));
  w.u32_be(remote_id_);
  w.u64_be(seq);
  w.raw(nonce);
  auto header = std::move(w).take();
  auto plaintext = encode_body(body);
  auto sealed = crypto::aead_seal(send_key_, nonce, header, plaintext);
  secure_zero(plaintext);
  header.insert(header.end(), sealed.begin(), sealed.end());
  return header;
}

ManagementMessage Session::open(ByteView frame_body) {
  if (closed_) throw Error(Errc::SessionClosed);
  auto h = wire::peek_header(frame_body);
  if (h.kind < 1 || h.kind > 7) throw Error(Errc::MalformedMessage, "not a transport frame");
  if (frame_body.size() < wire::kTransportHeaderSize + crypto::kAeadTagSize) {
    throw Error(Errc::MalformedMessage, "short transport frame");
  }
  if (h.session_id != local_id_) throw Error(Errc::IntegrityFail, "frame for another session");
  ByteReader r(frame_body.subspan(8), Errc::MalformedMessage);
  std::uint64_t seq = r.u64_be();
  auto nonce = r.array<12>();
  if (nonce != transport_nonce(seq)) throw Error(Errc::IntegrityFail, "nonce does not match sequence");
  auto header = frame_body.first(wire::kTransportHeaderSize);
  auto plaintext = crypto::aead_open(recv_key_, nonce, header, r.rest());
  if (!plaintext) throw Error(Errc::IntegrityFail);
  if (seq <= recv_seq_) {
    secure_zero(*plaintext);
    throw Error(Errc::ReplayedFrame, "sequence " + std::to_string(seq));
  }
  ManagementMessage msg;
  msg.session_id = h.session_id;
  msg.sequence = seq;
  try {
    msg.body = decode_body(static_cast<MessageKind>(h.kind), *plaintext);
  } catch (...) {
    secure_zero(*plaintext);
    throw;
  }
  secure_zero(*plaintext);
  recv_seq_ = seq;
  return msg;
}

void Session::close() {
  closed_ = true;
  send_key_.wipe();
  recv_key_.wipe();
}

// ---------------------------------------------------------------------------

struct HandshakeInitiator::State {
  SymmetricState ss;
  crypto::DhKeyPair local_static;
  crypto::DhPublic remote_static{};
  crypto::DhKeyPair ephemeral;
  std::uint32_t local_id = 0;
  Bytes initiation;
};

HandshakeInitiator::HandshakeInitiator(const crypto::DhKeyPair& local_static,
                                       const crypto::DhPublic& remote_static, std::uint64_t counter,
                                       RandomSource& rng)
    : state_(std::make_unique<State>()) {
  auto& st = *state_;
  st.local_static = local_static;
  st.remote_static = remote_static;
  st.local_id = static_cast<std::uint32_t>(rng.next_u64());
  st.ss.mix_hash(remote_static);

  ByteWriter w;
  put_header(w, wire::kHandshakeInit);
  w.u32_be(st.local_id);
  st.ss.mix_hash(be32(st.local_id));
  st.ephemeral = crypto::dh_generate(rng);
  st.ss.mix_hash(st.ephemeral.pub);
  w.raw(st.ephemeral.pub);
  mix_dh(st.ss, st.ephemeral.priv, remote_static);                 // es
  w.raw(st.ss.encrypt_and_hash(local_static.pub));                 // s
  mix_dh(st.ss, local_static.priv, remote_static);                 // ss
  ByteWriter payload;
  payload.u64_be(counter);
  w.raw(st.ss.encrypt_and_hash(payload.bytes()));
  st.initiation = std::move(w).take();
}

HandshakeInitiator::~HandshakeInitiator() = default;
HandshakeInitiator::HandshakeInitiator(HandshakeInitiator&&) noexcept = default;
HandshakeInitiator& HandshakeInitiator::operator=(HandshakeInitiator&&) noexcept = default;

std::uint32_t HandshakeInitiator::local_id() const { return state_->local_id; }
const Bytes& HandshakeInitiator::initiation() const { return state_->initiation; }

Session HandshakeInitiator::complete(ByteView body) {
  auto& st = *state_;
  auto h = wire::peek_header(body);
  if (h.kind == wire::kHandshakeReject) {
    ByteReader r(body.subspan(8), Errc::MalformedMessage);
    auto code = r.str16();
    if (code == "DECOMMISSIONED_PEER") throw Error(Errc::DecommissionedPeer, "server refused session");
    throw Error(Errc::AuthFail, "server refused session: " + code);
  }
  if (h.kind != wire::kHandshakeResponse) throw Error(Errc::MalformedMessage, "expected handshake response");
  ByteReader r(body.subspan(4), Errc::MalformedMessage);
  std::uint32_t remote_id = r.u32_be();
  std::uint32_t receiver = r.u32_be();
  if (receiver != st.local_id) throw Error(Errc::AuthFail, "response for another handshake");
  st.ss.mix_hash(be32(remote_id));
  st.ss.mix_hash(be32(receiver));
  crypto::DhPublic remote_ephemeral = r.array<32>();
  st.ss.mix_hash(remote_ephemeral);
  mix_dh(st.ss, st.ephemeral.priv, remote_ephemeral);  // ee
  mix_dh(st.ss, st.local_static.priv, remote_ephemeral);  // se
  auto payload = st.ss.decrypt_and_hash(r.raw(crypto::kAeadTagSize));
  if (!r.empty() || !payload.empty()) throw Error(Errc::AuthFail, "unexpected handshake payload");
  auto [k1, k2] = st.ss.split();
  st.ephemeral.priv.wipe();
  return Session(st.local_id, remote_id, std::move(k1), std::move(k2));
}

AcceptedHandshake accept_handshake(
    const crypto::DhKeyPair& local_static, ByteView body, std::uint32_t local_id, RandomSource& rng,
    const std::function<void(const crypto::DhPublic&, std::uint64_t)>& authorize) {
  auto h = wire::peek_header(body);
  if (h.kind != wire::kHandshakeInit) throw Error(Errc::MalformedMessage, "expected handshake initiation");
  SymmetricState ss;
  ss.mix_hash(local_static.pub);
  ByteReader r(body.subspan(4), Errc::MalformedMessage);
  std::uint32_t remote_id = r.u32_be();
  ss.mix_hash(be32(remote_id));
  crypto::DhPublic remote_ephemeral = r.array<32>();
  ss.mix_hash(remote_ephemeral);
  mix_dh(ss, local_static.priv, remote_ephemeral);  // es
  auto static_plain = ss.decrypt_and_hash(r.raw(32 + crypto::kAeadTagSize));
  crypto::DhPublic remote_static{};
  std::copy(static_plain.begin(), static_plain.end(), remote_static.begin());
  mix_dh(ss, local_static.priv, remote_static);  // ss
  auto payload = ss.decrypt_and_hash(r.raw(8 + crypto::kAeadTagSize));
  if (!r.empty()) throw Error(Errc::MalformedMessage, "trailing handshake bytes");
  ByteReader pr(payload, Errc::MalformedMessage);
  std::uint64_t counter = pr.u64_be();

  authorize(remote_static, counter);

  ByteWriter w;
  put_header(w, wire::kHandshakeResponse);
  w.u32_be(local_id);
  w.u32_be(remote_id);
  ss.mix_hash(be32(local_id));
  ss.mix_hash(be32(remote_id));
  auto ephemeral = crypto::dh_generate(rng);
  ss.mix_hash(ephemeral.pub);
  w.raw(ephemeral.pub);
  mix_dh(ss, ephemeral.priv, remote_ephemeral);  // ee
  mix_dh(ss, ephemeral.priv, remote_static);     // se
  w.raw(ss.encrypt_and_hash(ByteView{}));
  auto [k1, k2] = ss.split();
  return AcceptedHandshake{Session(local_id, remote_id, std::move(k2), std::move(k1)), remote_static,
                           counter, std::move(w).take()};
}

Bytes handshake_reject(std::uint32_t receiver_id, std::string_view code) {
  ByteWriter w;
  put_header(w, wire::kHandshakeReject);
  w.u32_be(receiver_id);
  w.str16(code);
  return std::move(w).take();
}

}  // namespace tokengate::mgmt
