#include "masrisk/env/common.hpp"

#include "masrisk/core/data_dir.hpp"

namespace masrisk::env {

void reject(const std::string& what) { throw ActionSpaceError(what); }

const json& action_field(const json& action, const char* key) {
    if (!action.is_object() || !action.contains(key)) reject(std::string("action needs field '") + key + "'");
    return action.at(key);
}

double action_number(const json& action, const char* key) {
    const json& v = action_field(action, key);
    if (!v.is_number()) reject(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

std::string action_string(const json& action, const char* key) {
    const json& v = action_field(action, key);
    if (!v.is_string()) reject(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

json load_fixture(const json& ref) {
    if (ref.is_object() || ref.is_array()) return ref;
    if (!ref.is_string()) throw ConfigError("fixture reference must be a name or an inline document");
    return read_json_file(data_dir() / "fixtures" / (ref.get<std::string>() + ".json"));
}

std::vector<std::string> numbered_labels(const std::string& prefix, std::size_t count) {
    std::vector<std::string> out;
    for (std::size_t i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

kernel::Topology make_topology(kernel::ScheduleKind kind, std::size_t n, std::size_t hub, std::vector<kernel::Edge> extra,
                               std::vector<kernel::Edge> removed) {
    kernel::TopologyDescriptor d;
    d.kind = kind;
    d.agent_count = n;
    d.hub = hub;
    d.extra = std::move(extra);
    d.removed = std::move(removed);
    return kernel::build_topology(d);
}

}  // namespace masrisk::env
