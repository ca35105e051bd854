#pragma once

#include "masrisk/core/json.hpp"
#include "masrisk/kernel/environment.hpp"

#include <string>
#include <vector>

namespace masrisk::env {

using kernel::ActionSpaceError;
using kernel::ConfigError;
using kernel::Turn;
using kernel::TurnRecord;

[[noreturn]] void reject(const std::string& what);

class BaseEnvironment : public kernel::Environment {
public:
    std::string risk_id() const override { return risk_; }
    const kernel::Roster& roster() const override { return roster_; }
    const kernel::Topology& topology() const override { return topology_; }

protected:
    BaseEnvironment(std::string risk, kernel::Roster roster, kernel::Topology topology)
        : risk_(std::move(risk)), roster_(std::move(roster)), topology_(std::move(topology)) {}

    std::size_t index_of(const std::string& label) const { return kernel::find_agent(roster_, label).index; }
    const std::string& label_of(std::size_t index) const { return roster_.at(index).id.label; }

    std::string risk_;
    kernel::Roster roster_;
    kernel::Topology topology_;
};

// Field accessors that turn malformed actions into ActionSpaceError.
double action_number(const json& action, const char* key);
std::string action_string(const json& action, const char* key);
const json& action_field(const json& action, const char* key);

// A fixture reference is either an inline object or the name of data/fixtures/<name>.json.
json load_fixture(const json& ref);

std::vector<std::string> numbered_labels(const std::string& prefix, std::size_t count);

kernel::Topology make_topology(kernel::ScheduleKind kind, std::size_t n, std::size_t hub = 0,
                               std::vector<kernel::Edge> extra = {}, std::vector<kernel::Edge> removed = {});

}  // namespace masrisk::env
