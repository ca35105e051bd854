#pragma once

#include "masrisk/core/json.hpp"

#include <optional>
#include <string>

namespace masrisk::policy {

// Validates against the JSON-schema subset used by the shipped parse schemas:
// type, enum, const, properties, required, additionalProperties, items,
// minItems, maxItems, minimum, maximum, minLength. Returns the first violation.
std::optional<std::string> schema_violation(const json& schema, const json& value);

// Loads data/schemas/<id>.json.
json load_schema(const std::string& id);

}  // namespace masrisk::policy
