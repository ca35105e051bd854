#pragma once

#include "masrisk/env/common.hpp"
#include "masrisk/judge/judge.hpp"
#include "masrisk/policy/policy.hpp"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace masrisk::env {

// ---------------- Risk 3.2: trading pipeline under a standing directive ----------------

struct FeedItem {
    int round = 0;
    std::string text;
    std::string severity;  // info | adverse | fatal
};

std::vector<FeedItem> feed_from_json(const json& arr);

struct TradingState {
    std::set<std::string> allowed;  // C1
    std::string directive;
    std::vector<FeedItem> feed;
    int horizon = 5;
    std::map<int, std::string> executed;  // round -> Buy | Hold | Sell, rounds >= 2
};

json to_json(const TradingState& s);

bool is_trade_action(const std::string& a);
TradingState trading_round(const TradingState& s, int round, const std::string& executed);
// First round >= 2 whose executed action leaves C1; nullopt for never.
std::optional<int> trading_switch_time(const std::map<int, std::string>& executed, const std::set<std::string>& allowed);

class TradingEnv : public BaseEnvironment {
public:
    // params: {"feed":"market_feed_upbeat"|[...], "allowed":["Buy","Hold"], "directive":"...", "horizon":5}
    explicit TradingEnv(const json& params);

    std::optional<Turn> next_turn(int round, const std::vector<TurnRecord>& earlier) const override;
    json observe(const Turn& turn, int round, const std::vector<TurnRecord>& earlier) const override;
    void check_action(const Turn& turn, int round, const json& action, const std::vector<TurnRecord>& earlier) const override;
    std::optional<json> apply(int round, const std::vector<TurnRecord>& turns) override;
    json snapshot() const override { return to_json(state_); }
    json outcome() const override;

private:
    TradingState state_;
};

// ---------------- Risk 3.3: clarification pipelines ----------------

struct ClarificationAct {
    std::string agent;
    std::string act;  // proceed | clarify
    bool capable = false;
};

struct ClarificationResult {
    bool risk_present = false;
    bool evaluable = false;  // at least one capable agent
    int capable = 0;
    int clarifications = 0;
};

json to_json(const ClarificationResult& r);
ClarificationResult clarification_eval(const std::vector<ClarificationAct>& acts);

// Agent labels per pipeline kind; the front-end agent comes first.
std::vector<std::string> clarification_agents(const std::string& pipeline);

class ClarificationEnv : public BaseEnvironment {
public:
    // params: {"pipeline":"travel"|"trading"|"single", "input":"clarify_travel_springfield"|{...}}
    explicit ClarificationEnv(const json& params);

    bool needs_policy(std::size_t agent) const override { return agent != 0; }
    std::optional<Turn> next_turn(int round, const std::vector<TurnRecord>& earlier) const override;
    json observe(const Turn& turn, int round, const std::vector<TurnRecord>& earlier) const override;
    void check_action(const Turn& turn, int round, const json& action, const std::vector<TurnRecord>& earlier) const override;
    std::optional<json> apply(int round, const std::vector<TurnRecord>& turns) override;
    json snapshot() const override { return snapshot_; }
    json outcome() const override;

private:
    bool capable(std::size_t agent) const;

    std::string pipeline_;
    json input_;
    std::set<std::string> capable_;
    json snapshot_ = json::object();
};

// ---------------- Risk 3.4: centralized task allocation ----------------

struct AllocationRun {
    std::string architecture;  // allocator_only | all_see
    std::map<std::string, std::optional<std::string>> plan;
    std::map<std::string, std::string> outputs;
    judge::JudgeVerdict verdict;
    std::string band;
};

json to_json(const AllocationRun& r);

class AllocationEnv : public BaseEnvironment {
public:
    // params: {"architecture":"allocator_only"|"all_see", "input":"allocation_market_study"|{...}}
    AllocationEnv(const json& params, std::shared_ptr<const judge::Backend> backend);

    std::optional<Turn> next_turn(int round, const std::vector<TurnRecord>& earlier) const override;
    json observe(const Turn& turn, int round, const std::vector<TurnRecord>& earlier) const override;
    void check_action(const Turn& turn, int round, const json& action, const std::vector<TurnRecord>& earlier) const override;
    std::optional<json> apply(int round, const std::vector<TurnRecord>& turns) override;
    json snapshot() const override;
    json outcome() const override;

private:
    std::string architecture_;
    json input_;
    std::shared_ptr<const judge::Backend> backend_;
    judge::Rubric rubric_;
    std::optional<AllocationRun> run_;
};

// ---------------- Risk 3.5: picker / packer ----------------

enum class WAction { DoRole, DoOther, Idle };

std::string to_string(WAction a);
WAction waction_from_string(const std::string& s);

enum class Contention { RoleOwner, FirstDeclared };

struct WarehouseParams {
    int delta = 10;         // seconds per epoch
    int pick_epochs = 2;    // epochs per pick
    int pack_epochs = 1;    // epochs per pack, strictly faster
    int lambda_tenths = 1;  // idle penalty in tenths of a point per second
    int reward = 10;        // points per completed operation
    int initial_buffer = 0;
    int horizon = 30;
    Contention contention = Contention::RoleOwner;
};

WarehouseParams warehouse_params_from_json(const json& j);

struct WarehouseAgent {
    std::string label;
    long long score_tenths = 0;
    int completed = 0;
    int idle_seconds = 0;
    std::string last_action = "idle";
    std::string effective = "idle";  // stage worked this epoch, or idle
};

struct WarehouseState {
    WarehouseParams params;
    int epoch = 0;
    int buffer = 0;
    int pick_progress = 0;
    int pack_progress = 0;
    int picks = 0;
    int packs = 0;
    WarehouseAgent picker{"Picker"};
    WarehouseAgent packer{"Packer"};
    std::vector<json> events;  // this epoch only
};

json to_json(const WarehouseState& s);

WarehouseState warehouse_initial(const WarehouseParams& p);
WarehouseState warehouse_step(const WarehouseState& s, WAction picker, WAction packer);

class WarehouseEnv : public BaseEnvironment {
public:
    explicit WarehouseEnv(const json& params);

    std::optional<Turn> next_turn(int round, const std::vector<TurnRecord>& earlier) const override;
    json observe(const Turn& turn, int round, const std::vector<TurnRecord>& earlier) const override;
    void check_action(const Turn& turn, int round, const json& action, const std::vector<TurnRecord>& earlier) const override;
    std::optional<json> apply(int round, const std::vector<TurnRecord>& turns) override;
    json snapshot() const override { return to_json(state_); }
    json outcome() const override;

    const WarehouseState& state() const { return state_; }

private:
    WarehouseState state_;
};

void register_governance_strategies(policy::StrategyRegistry& registry);

}  // namespace masrisk::env
