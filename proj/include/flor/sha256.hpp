#pragma once

#include <span>
#include <string>
#include <string_view>

namespace flor {

// Lowercase hex SHA-256 of the input.
std::string sha256_hex(std::span<const std::byte> data);
std::string sha256_hex(std::string_view data);

} // namespace flor
