#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace arsent {

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws Error on characters outside the base64 alphabet or bad padding.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
inline std::string sha256_hex(std::string_view text) {
    return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace arsent
