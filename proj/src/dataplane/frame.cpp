#include "tokengate/dataplane/frame.hpp"

#include <algorithm>

#include "tokengate/common/crypto.hpp"
#include "tokengate/common/error.hpp"

namespace tokengate::dataplane {

namespace {

crypto::AeadNonce nonce_for(std::uint32_t sender, std::uint64_t counter) {
  ByteWriter w;
  w.u32_be(sender);
  w.u64_be(counter);
  crypto::AeadNonce n{};
  std::copy(w.bytes().begin(), w.bytes().end(), n.begin());
  return n;
}

Bytes header_bytes(const ProtectedHeader& h) {
  ByteWriter w;
  w.raw(h.dst.bytes);
  w.raw(h.src.bytes);
  w.u16_be(kProtectedEtherType);
  w.u32_be(h.sec_id_hash);
  w.u32_be(h.key_version);
  w.u32_be(h.sender_index);
  w.u64_be(h.frame_counter);
  return std::move(w).take();
}

std::optional<Frame> open_inner(const mgmt::ChannelKey& key, const ProtectedHeader& h, ByteView frame) {
  auto pt = crypto::aead_open(key, nonce_for(h.sender_index, h.frame_counter),
                              frame.first(kProtectedHeaderSize), frame.subspan(kProtectedHeaderSize));
  if (!pt) return std::nullopt;
  try {
    return Frame::parse(*pt);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

Bytes Frame::serialize() const {
  if (payload.size() > kMaxPayload) throw Error(Errc::MalformedFrame, "payload exceeds 1500 bytes");
  ByteWriter w;
  w.raw(dst.bytes);
  w.raw(src.bytes);
  w.u16_be(ether_type);
  w.raw(payload);
  return std::move(w).take();
}

Frame Frame::parse(ByteView bytes) {
  if (bytes.size() < kFrameHeaderSize || bytes.size() > kFrameHeaderSize + kMaxPayload) {
    throw Error(Errc::MalformedFrame, "frame length " + std::to_string(bytes.size()));
  }
  ByteReader r(bytes, Errc::MalformedFrame);
  Frame f;
  f.dst.bytes = r.array<6>();
  f.src.bytes = r.array<6>();
  f.ether_type = r.u16_be();
  auto rest = r.rest();
  f.payload.assign(rest.begin(), rest.end());
  return f;
}

std::uint32_t sec_id_hash(std::string_view sec_id) {
  auto d = crypto::sha256({reinterpret_cast<const std::uint8_t*>(sec_id.data()), sec_id.size()});
  return (std::uint32_t{d[0]} << 24) | (std::uint32_t{d[1]} << 16) | (std::uint32_t{d[2]} << 8) | d[3];
}

bool is_protected(ByteView frame) {
  return frame.size() >= kFrameHeaderSize && frame[12] == (kProtectedEtherType >> 8) &&
         frame[13] == (kProtectedEtherType & 0xFF);
}

ProtectedHeader parse_protected_header(ByteView frame) {
  if (!is_protected(frame) || frame.size() < kProtectedHeaderSize + crypto::kAeadTagSize) {
    throw Error(Errc::MalformedFrame, "not a protected frame");
  }
  ByteReader r(frame, Errc::MalformedFrame);
  ProtectedHeader h;
  h.dst.bytes = r.array<6>();
  h.src.bytes = r.array<6>();
  r.u16_be();
  h.sec_id_hash = r.u32_be();
  h.key_version = r.u32_be();
  h.sender_index = r.u32_be();
  h.frame_counter = r.u64_be();
  return h;
}

std::optional<Frame> open_with_key(const mgmt::ChannelKey& key, ByteView frame) {
  try {
    return open_inner(key, parse_protected_header(frame), frame);
  } catch (const Error&) {
    return std::nullopt;
  }
}

ChannelState::ChannelState(const mgmt::ChannelConfigBody& config, MacAddress self)
    : sec_id_(config.sec_id), sec_hash_(sec_id_hash(config.sec_id)), self_(self),
      key_version_(config.key_version), key_(config.key), sender_index_(config.own_sender_index),
      members_(config.members) {}

std::vector<MacAddress> ChannelState::peers() const {
  std::vector<MacAddress> out;
  for (const auto& m : members_) {
    if (m.macsec_address != self_) out.push_back(m.macsec_address);
  }
  return out;
}

void ChannelState::apply_update(std::uint64_t now, const mgmt::ChannelUpdateBody& update) {
  members_ = update.members;
  if (update.key_version == key_version_ || !update.key) return;
  previous_ = OldKey{key_version_, key_, now + 1};
  key_version_ = update.key_version;
  key_ = *update.key;
  next_counter_ = 1;
  exhausted_ = false;
}

void ChannelState::apply_config(std::uint64_t now, const mgmt::ChannelConfigBody& config) {
  if (config.key_version != key_version_) {
    previous_ = OldKey{key_version_, key_, now + 1};
    key_version_ = config.key_version;
    key_ = config.key;
    next_counter_ = 1;
    exhausted_ = false;
  }
  sender_index_ = config.own_sender_index;
  members_ = config.members;
}

Bytes ChannelState::protect(const Frame& inner, const MacAddress& dst) {
  if (exhausted_) throw Error(Errc::CounterExhausted, sec_id_);
  ProtectedHeader h;
  h.dst = dst;
  h.src = self_;
  h.sec_id_hash = sec_hash_;
  h.key_version = key_version_;
  h.sender_index = sender_index_;
  h.frame_counter = next_counter_;
  if (next_counter_ == kMaxFrameCounter) {
    exhausted_ = true;
  } else {
    ++next_counter_;
  }
  auto out = header_bytes(h);
  auto plaintext = inner.serialize();
  auto sealed = crypto::aead_seal(key_, nonce_for(h.sender_index, h.frame_counter), out, plaintext);
  out.insert(out.end(), sealed.begin(), sealed.end());
  return out;
}

Frame ChannelState::deprotect(std::uint64_t now, ByteView frame) {
  expire(now);
  auto h = parse_protected_header(frame);
  if (h.sec_id_hash != sec_hash_) throw Error(Errc::NoChannel, "frame for another channel");
  const mgmt::ChannelKey* key = nullptr;
  if (h.key_version == key_version_) {
    key = &key_;
  } else if (previous_ && previous_->version == h.key_version && now <= previous_->valid_until) {
    key = &previous_->key;
  } else {
    throw Error(Errc::UnknownKeyVersion, std::to_string(h.key_version));
  }
  if (h.sender_index == sender_index_ ||
      std::none_of(members_.begin(), members_.end(),
                   [&](const mgmt::MemberInfo& m) { return m.sender_index == h.sender_index; })) {
    // The sender may have left after sending under the previous key.
    if (key == &key_) throw Error(Errc::NotMember, "sender index " + std::to_string(h.sender_index));
  }
  auto inner = open_inner(*key, h, frame);
  if (!inner) throw Error(Errc::BadTag);
  auto& last = replay_[{h.key_version, h.sender_index}];
  if (h.frame_counter <= last) throw Error(Errc::Replay, std::to_string(h.frame_counter));
  last = h.frame_counter;
  return *inner;
}

void ChannelState::expire(std::uint64_t now) {
  if (previous_ && now > previous_->valid_until) {
    previous_->key.wipe();
    previous_.reset();
  }
}

void ChannelState::wipe() {
  key_.wipe();
  if (previous_) previous_->key.wipe();
  previous_.reset();
}

}  // namespace tokengate::dataplane
