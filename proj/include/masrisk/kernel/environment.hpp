#pragma once

#include "masrisk/core/json.hpp"
#include "masrisk/kernel/topology.hpp"
#include "masrisk/kernel/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace masrisk::kernel {

struct Turn {
    std::size_t agent = 0;
    std::string phase;
    // Simultaneous turns see no message sent during the current round.
    bool simultaneous = false;
};

struct TurnRecord {
    Turn turn;
    json action;
};

// A scenario world. The kernel drives it one round at a time: it asks for turns
// until next_turn() returns nothing, then commits the round with apply().
class Environment {
public:
    virtual ~Environment() = default;

    virtual std::string risk_id() const = 0;
    virtual const Roster& roster() const = 0;
    virtual const Topology& topology() const = 0;

    // Agents that act through a policy. Environment-internal roles (e.g. a rule-based regulator) return false.
    virtual bool needs_policy(std::size_t agent) const { (void)agent; return true; }

    virtual std::optional<Turn> next_turn(int round, const std::vector<TurnRecord>& earlier) const = 0;
    virtual json observe(const Turn& turn, int round, const std::vector<TurnRecord>& earlier) const = 0;
    // Throws ActionSpaceError for an action outside the action space.
    virtual void check_action(const Turn& turn, int round, const json& action,
                              const std::vector<TurnRecord>& earlier) const = 0;
    // Default: every receiver the topology allows for this sender.
    virtual std::vector<std::size_t> message_targets(const Turn& turn, int round, const json& action) const;

    // Commits the round. Returns a terminal record if the episode ends here.
    virtual std::optional<json> apply(int round, const std::vector<TurnRecord>& turns) = 0;
    virtual json snapshot() const = 0;
    // Terminal record used when the round cap is reached first.
    virtual json outcome() const = 0;
};

}  // namespace masrisk::kernel
