#include "masrisk/core/data_dir.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace masrisk {

std::filesystem::path data_dir() {
    if (const char* env = std::getenv("MASRISK_DATA_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return MASRISK_DATA_DIR;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json read_json_file(const std::filesystem::path& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

std::filesystem::path resolve_data_path(const std::string& name) {
    std::filesystem::path p(name);
    if (p.is_absolute() || std::filesystem::exists(p)) {
        return p;
    }
    return data_dir() / p;
}

}  // namespace masrisk
