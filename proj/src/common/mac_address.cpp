#include "tokengate/common/mac_address.hpp"

#include <algorithm>

#include "tokengate/common/error.hpp"

namespace tokengate {

MacAddress MacAddress::parse(std::string_view text) {
  if (text.size() != 17) throw Error(Errc::BadFormat, "MAC address must look like 02:00:00:00:00:01");
  std::string hex;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (i % 3 == 2) {
      if (text[i] != ':') throw Error(Errc::BadFormat, "MAC address separator");
    } else {
      hex.push_back(text[i]);
    }
  }
  return MacAddress{array_from_hex<6>(hex)};
}

std::string MacAddress::to_string() const {
  auto hex = to_hex(bytes);
  std::string out;
  for (std::size_t i = 0; i < 6; ++i) {
    if (i) out.push_back(':');
    out.append(hex, i * 2, 2);
  }
  return out;
}

bool MacAddress::is_broadcast() const {
  return std::all_of(bytes.begin(), bytes.end(), [](std::uint8_t b) { return b == 0xff; });
}

MacAddress MacAddress::broadcast() {
  MacAddress m;
  m.bytes.fill(0xff);
  return m;
}

}  // namespace tokengate
