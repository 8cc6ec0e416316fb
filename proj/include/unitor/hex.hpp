#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace unitor {

/// Lowercase hex of a byte range.
std::string to_hex(std::span<const std::uint8_t> bytes);

/// Decodes hex (either case). Returns nullopt on odd length or a non-hex digit.
std::optional<std::vector<std::uint8_t>> from_hex(std::string_view text);

/// Like from_hex, but only lowercase digits are accepted.
std::optional<std::vector<std::uint8_t>> from_lower_hex(std::string_view text);

}  // namespace unitor
