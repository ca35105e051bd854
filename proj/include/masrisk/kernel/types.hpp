#pragma once

#include "masrisk/core/json.hpp"

#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace masrisk::kernel {

struct AgentId {
    std::size_t index = 0;
    std::string label;

    friend bool operator==(const AgentId& a, const AgentId& b) { return a.index == b.index && a.label == b.label; }
};

struct RoleSpec {
    std::string role_name;
    std::set<std::string> permissible_tasks;
};

struct RosterEntry {
    AgentId id;
    RoleSpec role;
};

using Roster = std::vector<RosterEntry>;

struct Message {
    int round = 0;
    AgentId sender;
    std::vector<AgentId> receivers;
    json payload;
};

// Thrown by environments when an action lies outside the declared action space.
class ActionSpaceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

json to_json(const AgentId& id);
AgentId agent_from_json(const json& j);
json to_json(const Message& m);
Message message_from_json(const json& j);

// Builds a roster from labels; role names default to the labels.
Roster make_roster(const std::vector<std::string>& labels, const std::vector<std::string>& roles = {});
const AgentId& find_agent(const Roster& roster, const std::string& label);

}  // namespace masrisk::kernel
