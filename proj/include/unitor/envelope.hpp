#pragma once

#include <string>
#include <string_view>

namespace unitor {

/// A mail message as it moves through the broker.
struct Envelope {
  std::string from;
  std::string to;
  std::string subject;
  std::string body;

  friend bool operator==(const Envelope&, const Envelope&) = default;
};

/// local@domain with no whitespace, angle brackets or control characters.
bool is_address(std::string_view address);

}  // namespace unitor
