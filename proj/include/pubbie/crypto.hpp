#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace pubbie {

// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view data);

// `bytes` bytes from the OS CSPRNG, base64url-encoded without padding
// (16 bytes -> 22 characters of [A-Za-z0-9_-]).
std::string random_token(std::size_t bytes = 16);

}  // namespace pubbie
