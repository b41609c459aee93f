#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace evofuzz {

// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

// 64-bit FNV-1a; used for cheap stable labels (e.g. per-API RNG streams).
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace evofuzz
