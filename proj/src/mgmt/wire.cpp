#include "tokengate/mgmt/wire.hpp"

#include "tokengate/common/error.hpp"

namespace tokengate::mgmt::wire {

Header peek_header(ByteView body) {
  ByteReader r(body, Errc::MalformedMessage);
  if (r.u8() != kMagic0 || r.u8() != kMagic1) throw Error(Errc::MalformedMessage, "bad magic");
  if (r.u8() != kVersion) throw Error(Errc::MalformedMessage, "unsupported version");
  Header h;
  h.kind = r.u8();
  h.session_id = r.u32_be();
  return h;
}

Bytes length_prefixed(ByteView body) {
  ByteWriter w;
  w.u32_be(static_cast<std::uint32_t>(body.size()));
  w.raw(body);
  return std::move(w).take();
}

void StreamDecoder::feed(ByteView bytes) { buffer_.insert(buffer_.end(), bytes.begin(), bytes.end()); }

std::optional<Bytes> StreamDecoder::next() {
  if (buffer_.size() < 4) return std::nullopt;
  std::uint32_t len = (std::uint32_t{buffer_[0]} << 24) | (std::uint32_t{buffer_[1]} << 16) |
                      (std::uint32_t{buffer_[2]} << 8) | buffer_[3];
  if (len > kMaxBodySize) throw Error(Errc::MalformedMessage, "frame too large");
  if (buffer_.size() < 4 + len) return std::nullopt;
  Bytes body(buffer_.begin() + 4, buffer_.begin() + 4 + len);
  buffer_.erase(buffer_.begin(), buffer_.begin() + 4 + len);
  return body;
}

}  // namespace tokengate::mgmt::wire
