#pragma once

#include "masrisk/core/json.hpp"
#include "masrisk/core/rng.hpp"

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace masrisk::policy {

struct Observation {
    int round = 0;
    std::string phase;
    json broadcast_state;
    std::vector<json> inbox;
};

json to_json(const Observation& obs);

// What one agent saw and did in one completed round. Rounds in which the agent
// had no turn still get an entry so that history length tracks the clock.
struct RoundMemory {
    int round = 0;
    std::vector<Observation> observations;
    std::vector<json> actions;
};

using LocalHistory = std::vector<RoundMemory>;

// One raw remote request/response pair, kept for audit.
struct RemoteExchange {
    std::string agent;
    int round = 0;
    int attempt = 0;
    json request;
    int status = 0;
    std::string response_body;
    std::string error;
};

json to_json(const RemoteExchange& ex);

struct ActContext {
    Rng& rng;
    std::vector<RemoteExchange>* audit = nullptr;
    std::string agent_label;
};

// Raised when a policy cannot produce an action (missing script entry, exhausted retries).
class PolicyError : public std::runtime_error {
public:
    PolicyError(const std::string& cause, const std::string& what) : std::runtime_error(what), cause_(cause) {}
    const std::string& cause() const { return cause_; }

private:
    std::string cause_;
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string kind() const = 0;
    virtual json act(const Observation& obs, const LocalHistory& history, ActContext& ctx) const = 0;
};

using PolicyPtr = std::shared_ptr<const Policy>;
using PolicyMap = std::map<std::string, PolicyPtr>;

// Digest of the public state only; the inbox is deliberately excluded.
std::string observation_digest(const Observation& obs);

void require_history_aligned(const Observation& obs, const LocalHistory& history);

struct ScriptEntry {
    int round = 0;              // 0 matches every round
    std::string digest = "*";   // "*" matches every observation
    std::string phase;          // empty matches every phase
    json action;
};

// Action table keyed by (round, observation digest). The most specific entry wins.
class ScriptedPolicy : public Policy {
public:
    explicit ScriptedPolicy(std::vector<ScriptEntry> table) : table_(std::move(table)) {}

    static ScriptedPolicy constant(json action);
    static ScriptedPolicy sequence(const std::vector<json>& per_round);

    std::string kind() const override { return "scripted"; }
    json act(const Observation& obs, const LocalHistory& history, ActContext& ctx) const override;

    // True when every round 1..horizon and every phase in `phases` has an entry that matches any observation.
    bool is_total(int horizon, const std::vector<std::string>& phases = {""}) const;

private:
    std::vector<ScriptEntry> table_;
};

// Named strategy with parameters. Memory is recomputed from the local history, so
// instances stay immutable and shareable.
using StrategyFn = std::function<json(const json& params, const Observation& obs, const LocalHistory& history, Rng& rng)>;

class StateMachinePolicy : public Policy {
public:
    StateMachinePolicy(std::string name, json params, StrategyFn fn)
        : name_(std::move(name)), params_(std::move(params)), fn_(std::move(fn)) {}

    std::string kind() const override { return "state-machine"; }
    const std::string& name() const { return name_; }
    json act(const Observation& obs, const LocalHistory& history, ActContext& ctx) const override;

private:
    std::string name_;
    json params_;
    StrategyFn fn_;
};

class StrategyRegistry {
public:
    void add(const std::string& name, StrategyFn fn);
    bool contains(const std::string& name) const { return fns_.count(name) > 0; }
    const StrategyFn& get(const std::string& name) const;
    std::vector<std::string> names() const;

private:
    std::map<std::string, StrategyFn> fns_;
};

// Scenario-independent strategies: constant, cycle, random_choice.
void register_generic_strategies(StrategyRegistry& registry);

class HttpTransport;

// Builds a policy from its JSON description:
//   {"kind":"scripted","table":[...]} | {"kind":"constant","action":{...}} | {"kind":"sequence","actions":[...]}
//   {"kind":"strategy","name":"...","params":{...}} | {"kind":"remote", ...}
// A null transport selects the HTTP client.
PolicyPtr make_policy(const json& spec, const StrategyRegistry& registry, std::shared_ptr<HttpTransport> transport = nullptr);

}  // namespace masrisk::policy
