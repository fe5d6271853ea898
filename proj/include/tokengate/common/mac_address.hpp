#pragma once

#include <compare>
#include <string>
#include <string_view>

#include "tokengate/common/bytes.hpp"

namespace tokengate {

struct MacAddress {
  ByteArray<6> bytes{};

  // "02:00:00:00:00:01"; throws Error{BadFormat}.
  static MacAddress parse(std::string_view text);
  std::string to_string() const;
  bool is_broadcast() const;

  static MacAddress broadcast();

  friend auto operator<=>(const MacAddress&, const MacAddress&) = default;
};

}  // namespace tokengate
