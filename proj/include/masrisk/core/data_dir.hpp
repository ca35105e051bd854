#pragma once

#include "masrisk/core/json.hpp"

#include <filesystem>
#include <string>

namespace masrisk {

// Root of the shipped data files. MASRISK_DATA_DIR in the environment overrides the build-time path.
std::filesystem::path data_dir();

std::string read_text_file(const std::filesystem::path& path);
json read_json_file(const std::filesystem::path& path);

// Resolves a path relative to data_dir() unless it is absolute or exists as given.
std::filesystem::path resolve_data_path(const std::string& name);

}  // namespace masrisk
