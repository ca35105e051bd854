#pragma once

#include "masrisk/core/json.hpp"

#include <string>

namespace masrisk {

// Lowercase hex SHA-256 of raw bytes.
std::string sha256_hex(const std::string& bytes);

// Sorted-key, whitespace-free serialization used for hashing.
std::string canonical_dump(const json& value);

std::string config_digest(const json& config);

}  // namespace masrisk
