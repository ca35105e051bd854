#pragma once

#include "masrisk/core/json.hpp"
#include "masrisk/kernel/types.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace masrisk::kernel {

enum class ScheduleKind { BroadcastSimultaneous, SequentialPipeline, HubAndSpoke, RelayChain };

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& name);

using Edge = std::pair<std::size_t, std::size_t>;

struct EdgeOverride {
    int round = 0;
    std::size_t sender = 0;
    std::size_t receiver = 0;
    bool allowed = false;
};

struct TopologyDescriptor {
    ScheduleKind kind = ScheduleKind::BroadcastSimultaneous;
    std::size_t agent_count = 0;
    std::vector<std::size_t> order;  // pipeline / relay path; identity when empty
    std::size_t hub = 0;
    int horizon = 0;                 // 0 means unbounded
    std::vector<Edge> extra;         // added for every round
    std::vector<Edge> removed;       // removed for every round
    std::vector<EdgeOverride> overrides;
};

TopologyDescriptor topology_descriptor_from_json(const json& j);
json to_json(const TopologyDescriptor& d);

class Topology {
public:
    Topology() = default;

    bool allowed(std::size_t sender, std::size_t receiver, int round) const;
    std::set<Edge> edges(int round) const;
    ScheduleKind kind() const { return kind_; }
    std::size_t agent_count() const { return agent_count_; }
    int horizon() const { return horizon_; }

private:
    friend Topology build_topology(const TopologyDescriptor& spec);

    ScheduleKind kind_ = ScheduleKind::BroadcastSimultaneous;
    std::size_t agent_count_ = 0;
    int horizon_ = 0;
    std::set<Edge> base_;
    std::map<int, std::map<Edge, bool>> overrides_;
};

Topology build_topology(const TopologyDescriptor& spec);

struct DeliveryResult {
    Message delivered;  // receivers trimmed to the allowed ones
    std::vector<AgentId> dropped;
};

DeliveryResult deliver(const Topology& topology, const Message& message);

}  // namespace masrisk::kernel
