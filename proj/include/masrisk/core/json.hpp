#pragma once

#include <json.hpp>

namespace masrisk {
using json = nlohmann::json;
}
