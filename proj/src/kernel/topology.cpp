#include "masrisk/kernel/topology.hpp"

#include <algorithm>
#include <numeric>

namespace masrisk::kernel {

json to_json(const AgentId& id) { return json{{"index", id.index}, {"label", id.label}}; }

AgentId agent_from_json(const json& j) { return AgentId{j.at("index").get<std::size_t>(), j.at("label").get<std::string>()}; }

json to_json(const Message& m) {
    json receivers = json::array();
    for (const auto& r : m.receivers) {
        receivers.push_back(to_json(r));
    }
    return json{{"round", m.round}, {"sender", to_json(m.sender)}, {"receivers", receivers}, {"payload", m.payload}};
}

Message message_from_json(const json& j) {
    Message m;
    m.round = j.at("round").get<int>();
    m.sender = agent_from_json(j.at("sender"));
    for (const auto& r : j.at("receivers")) {
        m.receivers.push_back(agent_from_json(r));
    }
    m.payload = j.at("payload");
    return m;
}

Roster make_roster(const std::vector<std::string>& labels, const std::vector<std::string>& roles) {
    Roster roster;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        RosterEntry e;
        e.id = AgentId{i, labels[i]};
        e.role.role_name = i < roles.size() ? roles[i] : labels[i];
        roster.push_back(std::move(e));
    }
    return roster;
}

const AgentId& find_agent(const Roster& roster, const std::string& label) {
    for (const auto& e : roster) {
        if (e.id.label == label) {
            return e.id;
        }
    }
    throw ConfigError("unknown agent label '" + label + "'");
}

std::string to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::BroadcastSimultaneous: return "broadcast-simultaneous";
        case ScheduleKind::SequentialPipeline: return "sequential-pipeline";
        case ScheduleKind::HubAndSpoke: return "hub-and-spoke";
        case ScheduleKind::RelayChain: return "relay-chain";
    }
    return "unknown";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
    if (name == "broadcast-simultaneous") return ScheduleKind::BroadcastSimultaneous;
    if (name == "sequential-pipeline") return ScheduleKind::SequentialPipeline;
    if (name == "hub-and-spoke") return ScheduleKind::HubAndSpoke;
    if (name == "relay-chain") return ScheduleKind::RelayChain;
    throw ConfigError("unknown schedule_kind '" + name + "'");
}

namespace {

std::vector<Edge> edges_from_json(const json& arr) {
    std::vector<Edge> out;
    for (const auto& e : arr) {
        out.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
    }
    return out;
}

json edges_to_json(const std::vector<Edge>& edges) {
    json arr = json::array();
    for (const auto& [a, b] : edges) {
        arr.push_back(json::array({a, b}));
    }
    return arr;
}

}  // namespace

TopologyDescriptor topology_descriptor_from_json(const json& j) {
    TopologyDescriptor d;
    d.kind = schedule_kind_from_string(j.at("schedule_kind").get<std::string>());
    d.agent_count = j.at("agents").get<std::size_t>();
    d.order = j.value("order", std::vector<std::size_t>{});
    d.hub = j.value("hub", std::size_t{0});
    d.horizon = j.value("horizon", 0);
    if (j.contains("extra")) d.extra = edges_from_json(j.at("extra"));
    if (j.contains("removed")) d.removed = edges_from_json(j.at("removed"));
    if (j.contains("overrides")) {
        for (const auto& o : j.at("overrides")) {
            d.overrides.push_back(EdgeOverride{o.at("round").get<int>(), o.at("sender").get<std::size_t>(),
                                               o.at("receiver").get<std::size_t>(), o.at("allowed").get<bool>()});
        }
    }
    return d;
}

json to_json(const TopologyDescriptor& d) {
    json j{{"schedule_kind", to_string(d.kind)}, {"agents", d.agent_count}, {"hub", d.hub}, {"horizon", d.horizon}};
    j["order"] = d.order;
    j["extra"] = edges_to_json(d.extra);
    j["removed"] = edges_to_json(d.removed);
    json ov = json::array();
    for (const auto& o : d.overrides) {
        ov.push_back(json{{"round", o.round}, {"sender", o.sender}, {"receiver", o.receiver}, {"allowed", o.allowed}});
    }
    j["overrides"] = ov;
    return j;
}

Topology build_topology(const TopologyDescriptor& spec) {
    const std::size_t n = spec.agent_count;
    if (n < 2) {
        throw ConfigError("topology needs at least 2 agents, got " + std::to_string(n));
    }
    std::vector<std::size_t> order = spec.order;
    if (order.empty()) {
        order.resize(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
    }
    if (spec.kind == ScheduleKind::SequentialPipeline || spec.kind == ScheduleKind::RelayChain) {
        std::vector<std::size_t> sorted = order;
        std::sort(sorted.begin(), sorted.end());
        if (sorted.size() != n || std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end() || sorted.back() >= n) {
            throw ConfigError("path order must be a permutation of all agents");
        }
    }
    if (spec.kind == ScheduleKind::SequentialPipeline &&
        (!spec.extra.empty() || !spec.removed.empty() || !spec.overrides.empty())) {
        throw ConfigError("sequential-pipeline topologies cannot be modified: allowed edges must stay a single path");
    }
    if (spec.kind == ScheduleKind::HubAndSpoke && spec.hub >= n) {
        throw ConfigError("hub index out of range");
    }

    Topology t;
    t.kind_ = spec.kind;
    t.agent_count_ = n;
    t.horizon_ = spec.horizon;
    switch (spec.kind) {
        case ScheduleKind::BroadcastSimultaneous:
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    if (i != j) t.base_.insert({i, j});
            break;
        case ScheduleKind::SequentialPipeline:
            for (std::size_t k = 0; k + 1 < n; ++k) t.base_.insert({order[k], order[k + 1]});
            break;
        case ScheduleKind::HubAndSpoke:
            for (std::size_t i = 0; i < n; ++i) {
                if (i == spec.hub) continue;
                t.base_.insert({spec.hub, i});
                t.base_.insert({i, spec.hub});
            }
            break;
        case ScheduleKind::RelayChain:
            for (std::size_t k = 0; k + 1 < n; ++k) {
                t.base_.insert({order[k], order[k + 1]});
                t.base_.insert({order[k + 1], order[k]});
            }
            break;
    }
    auto check_edge = [n](std::size_t a, std::size_t b) {
        if (a >= n || b >= n) throw ConfigError("edge endpoint out of range");
        if (a == b) throw ConfigError("self-edges are forbidden");
    };
    for (const auto& [a, b] : spec.extra) {
        check_edge(a, b);
        t.base_.insert({a, b});
    }
    for (const auto& [a, b] : spec.removed) {
        check_edge(a, b);
        t.base_.erase({a, b});
    }
    for (const auto& o : spec.overrides) {
        check_edge(o.sender, o.receiver);
        t.overrides_[o.round][{o.sender, o.receiver}] = o.allowed;
    }
    return t;
}

bool Topology::allowed(std::size_t sender, std::size_t receiver, int round) const {
    if (sender == receiver || sender >= agent_count_ || receiver >= agent_count_) return false;
    if (round < 1 || (horizon_ > 0 && round > horizon_)) return false;
    if (auto it = overrides_.find(round); it != overrides_.end()) {
        if (auto e = it->second.find({sender, receiver}); e != it->second.end()) return e->second;
    }
    return base_.count({sender, receiver}) > 0;
}

std::set<Edge> Topology::edges(int round) const {
    std::set<Edge> out;
    for (std::size_t i = 0; i < agent_count_; ++i)
        for (std::size_t j = 0; j < agent_count_; ++j)
            if (allowed(i, j, round)) out.insert({i, j});
    return out;
}

DeliveryResult deliver(const Topology& topology, const Message& message) {
    DeliveryResult result;
    result.delivered = message;
    result.delivered.receivers.clear();
    for (const auto& r : message.receivers) {
        if (topology.allowed(message.sender.index, r.index, message.round)) {
            result.delivered.receivers.push_back(r);
        } else {
            result.dropped.push_back(r);
        }
    }
    return result;
}

}  // namespace masrisk::kernel
