#include "masrisk/policy/schema.hpp"

#include "masrisk/core/data_dir.hpp"

#include <cmath>

namespace masrisk::policy {

namespace {

bool has_type(const json& value, const std::string& type) {
    if (type == "object") return value.is_object();
    if (type == "array") return value.is_array();
    if (type == "string") return value.is_string();
    if (type == "number") return value.is_number();
    if (type == "integer") {
        if (value.is_number_integer()) return true;
        return value.is_number_float() && std::floor(value.get<double>()) == value.get<double>();
    }
    if (type == "boolean") return value.is_boolean();
    if (type == "null") return value.is_null();
    return false;
}

std::optional<std::string> check(const json& schema, const json& value, const std::string& path) {
    if (!schema.is_object()) return std::nullopt;
    if (schema.contains("type")) {
        const json& t = schema.at("type");
        bool ok = false;
        if (t.is_string()) {
            ok = has_type(value, t.get<std::string>());
        } else {
            for (const auto& alt : t) ok = ok || has_type(value, alt.get<std::string>());
        }
        if (!ok) return path + ": expected type " + t.dump();
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& e : schema.at("enum")) found = found || e == value;
        if (!found) return path + ": value " + value.dump() + " not in enum";
    }
    if (schema.contains("const") && schema.at("const") != value) return path + ": value differs from const";
    if (value.is_number()) {
        const double x = value.get<double>();
        if (schema.contains("minimum") && x < schema.at("minimum").get<double>()) return path + ": below minimum";
        if (schema.contains("maximum") && x > schema.at("maximum").get<double>()) return path + ": above maximum";
    }
    if (value.is_string() && schema.contains("minLength") &&
        value.get<std::string>().size() < schema.at("minLength").get<std::size_t>()) {
        return path + ": string too short";
    }
    if (value.is_object()) {
        if (schema.contains("required")) {
            for (const auto& r : schema.at("required")) {
                if (!value.contains(r.get<std::string>())) return path + ": missing required '" + r.get<std::string>() + "'";
            }
        }
        const json props = schema.value("properties", json::object());
        for (const auto& [k, v] : value.items()) {
            if (props.contains(k)) {
                if (auto err = check(props.at(k), v, path + "." + k)) return err;
            } else if (schema.contains("additionalProperties") && schema.at("additionalProperties") == false) {
                return path + ": unexpected property '" + k + "'";
            }
        }
    }
    if (value.is_array()) {
        if (schema.contains("minItems") && value.size() < schema.at("minItems").get<std::size_t>()) return path + ": too few items";
        if (schema.contains("maxItems") && value.size() > schema.at("maxItems").get<std::size_t>()) return path + ": too many items";
        if (schema.contains("items")) {
            for (std::size_t i = 0; i < value.size(); ++i) {
                if (auto err = check(schema.at("items"), value[i], path + "[" + std::to_string(i) + "]")) return err;
            }
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<std::string> schema_violation(const json& schema, const json& value) { return check(schema, value, "$"); }

json load_schema(const std::string& id) { return read_json_file(data_dir() / "schemas" / (id + ".json")); }

}  // namespace masrisk::policy
