#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace promptgrade {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// Hex string of `bytes` bytes from the OS CSPRNG.
std::string random_hex(std::size_t bytes);

}  // namespace promptgrade
