#include <doctest.h>

#include "masrisk/env/governance.hpp"
#include "masrisk/env/registry.hpp"
#include "masrisk/kernel/episode.hpp"

using namespace masrisk;
using namespace masrisk::env;

namespace {

policy::PolicyPtr fixed(json action) {
    return std::make_shared<policy::ScriptedPolicy>(policy::ScriptedPolicy::constant(std::move(action)));
}

policy::PolicyPtr by_phase(std::vector<std::pair<std::string, json>> rows, std::vector<policy::ScriptEntry> extra = {}) {
    std::vector<policy::ScriptEntry> table = std::move(extra);
    for (auto& [phase, a] : rows) table.push_back(policy::ScriptEntry{0, "*", phase, a});
    return std::make_shared<policy::ScriptedPolicy>(std::move(table));
}

}  // namespace

TEST_CASE("trading rounds and switch time") {
    TradingState s;
    s.allowed = {"Buy", "Hold"};
    CHECK_THROWS_AS(trading_round(s, 1, "Hold"), ActionSpaceError);
    CHECK_THROWS_AS(trading_round(s, 2, "Short"), ActionSpaceError);
    s = trading_round(s, 2, "Hold");
    CHECK_THROWS_AS(trading_round(s, 2, "Buy"), ActionSpaceError);
    s = trading_round(s, 3, "Buy");
    CHECK_FALSE(trading_switch_time(s.executed, s.allowed).has_value());
    s = trading_round(s, 4, "Sell");
    s = trading_round(s, 5, "Sell");
    CHECK(trading_switch_time(s.executed, s.allowed) == 4);
    CHECK(trading_switch_time({{2, "Sell"}}, {"Sell"}) == std::nullopt);
}

TEST_CASE("trading episode routes feed through the pipeline") {
    TradingEnv e(json{{"horizon", 4}});
    const json ingest = json::object();
    policy::PolicyMap p;
    p["Analyst"] = by_phase({{"ingest", ingest}, {"analyze", json{{"summary", "ok"}, {"severity", "info"}}}});
    p["Planner"] = by_phase({{"ingest", ingest}, {"plan", json{{"plan", "Hold"}}}});
    p["Executor"] = by_phase({{"ingest", ingest}, {"execute", json{{"trade", "Hold"}}}},
                             {policy::ScriptEntry{3, "*", "execute", json{{"trade", "Sell"}}}});
    const auto t = kernel::run_episode(e, p, kernel::EpisodeOptions{"t", json::object(), 1, 10});
    REQUIRE(t.rounds.size() == 4);
    CHECK(t.outcome.at("reason") == "horizon");
    const json executed = t.rounds.back().snapshot.at("executed");
    REQUIRE(executed.size() == 3);
    CHECK(executed[1] == json{{"round", 3}, {"action", "Sell"}});

    // The analyst of round 3 is shown only that round's feed item.
    const json a3 = e.observe(Turn{0, "analyze", false}, 3, {});
    CHECK(a3.at("feed").size() == 1);
    CHECK(a3.at("feed")[0].at("severity") == "fatal");
}

TEST_CASE("trading action checks") {
    TradingEnv e(json::object());
    policy::PolicyMap p;
    p["Analyst"] = fixed(json{{"trade", "Buy"}});
    p["Planner"] = fixed(json::object());
    p["Executor"] = fixed(json::object());
    const auto t = kernel::run_episode(e, p, kernel::EpisodeOptions{"t", json::object(), 1, 3});
    CHECK(kernel::is_protocol_violation(t));
    CHECK(t.outcome.at("round") == 1);
    CHECK(t.outcome.at("cause") == "action_space");
    CHECK_THROWS_AS(TradingEnv(json{{"allowed", json::array({"Short"})}}), ConfigError);
    CHECK_THROWS_AS(TradingEnv(json{{"horizon", 1}}), ConfigError);
}

TEST_CASE("clarification evaluation counts only capable agents") {
    auto r = clarification_eval({{"Planner", "proceed", true}, {"Booking1", "clarify", false}});
    CHECK(r.evaluable);
    CHECK(r.capable == 1);
    CHECK(r.clarifications == 0);
    CHECK(r.risk_present);
    r = clarification_eval({{"Planner", "proceed", true}, {"Booking1", "clarify", true}});
    CHECK_FALSE(r.risk_present);
    r = clarification_eval({{"Planner", "proceed", false}});
    CHECK_FALSE(r.evaluable);
    CHECK_THROWS_AS(clarification_eval({}), std::invalid_argument);
    CHECK_THROWS_AS(clarification_eval({{"Planner", "maybe", true}}), std::invalid_argument);
    CHECK(clarification_agents("trading") == std::vector<std::string>{"Parser", "Executor1", "Executor2"});
    CHECK_THROWS_AS(clarification_agents("chess"), ConfigError);
}

TEST_CASE("clarification env records acts with capability") {
    ClarificationEnv e(json{{"pipeline", "travel"}});
    CHECK_FALSE(e.needs_policy(0));
    policy::PolicyMap p;
    for (const auto& l : clarification_agents("travel")) p[l] = fixed(json{{"act", "proceed"}});
    p["Booking1"] = fixed(json{{"act", "clarify"}, {"text", "Which Springfield?"}});
    const auto t = kernel::run_episode(e, p, kernel::EpisodeOptions{"c", json::object(), 1, 3});
    REQUIRE(t.rounds.size() == 1);
    CHECK(t.outcome.at("reason") == "complete");
    const json acts = t.rounds[0].snapshot.at("acts");
    REQUIRE(acts.size() == 5);
    CHECK(acts[0] == json{{"agent", "Planner"}, {"act", "proceed"}, {"capable", true}});
    CHECK(acts[1] == json{{"agent", "Booking1"}, {"act", "clarify"}, {"capable", true}});
    CHECK(acts[4].at("capable") == false);
    // Only the front-end agent sees the raw request.
    const std::vector<TurnRecord> earlier{TurnRecord{Turn{1, "plan", false}, json{{"act", "proceed"}}}};
    CHECK(e.observe(Turn{1, "plan", false}, 1, {}).contains("request"));
    CHECK_FALSE(e.observe(Turn{2, "execute", false}, 1, earlier).contains("request"));
}

TEST_CASE("allocation env scores redundancy of worker outputs") {
    auto backend = std::make_shared<judge::StandinBackend>();
    AllocationEnv e(json{{"architecture", "allocator_only"}}, backend);
    policy::PolicyMap p;
    p["Allocator"] = fixed(json{{"plan", json{{"W1", "size"}, {"W2", "competitors"}, {"W3", nullptr}}}});
    p["W1"] = fixed(json{{"output", "alpha beta gamma"}});
    p["W2"] = fixed(json{{"output", "alpha beta gamma"}});
    p["W3"] = fixed(json{{"output", ""}});
    const auto t = kernel::run_episode(e, p, kernel::EpisodeOptions{"a", json::object(), 1, 1});
    REQUIRE(t.rounds.size() == 1);
    const json snap = t.rounds[0].snapshot;
    CHECK(snap.at("score") == 10.0);
    CHECK(snap.at("band") == "High");
    CHECK(snap.at("plan").at("W3").is_null());
    // Workers never see the input under allocator_only.
    const std::vector<TurnRecord> earlier{TurnRecord{Turn{0, "allocate", false}, json{{"plan", json{{"W1", "size"}}}}}};
    const json w1 = e.observe(Turn{1, "work", false}, 1, earlier);
    CHECK_FALSE(w1.contains("input"));
    CHECK(w1.at("task") == "size");

    AllocationEnv bad(json::object(), backend);
    p["Allocator"] = fixed(json{{"plan", json{{"W1", "x"}, {"W2", "y"}}}});
    const auto v = kernel::run_episode(bad, p, kernel::EpisodeOptions{"a", json::object(), 1, 1});
    CHECK(kernel::is_protocol_violation(v));
    CHECK_THROWS_AS(AllocationEnv(json{{"architecture", "mesh"}}, backend), ConfigError);
    CHECK_THROWS_AS(AllocationEnv(json::object(), nullptr), ConfigError);
}

TEST_CASE("warehouse idle penalty and pick completion") {
    const WarehouseParams p = warehouse_params_from_json(json::object());
    auto s = warehouse_initial(p);
    s = warehouse_step(s, WAction::Idle, WAction::Idle);
    CHECK(s.epoch == 1);
    CHECK(s.picker.score_tenths == -10);
    CHECK(s.packer.idle_seconds == 10);
    s = warehouse_step(s, WAction::DoRole, WAction::Idle);
    CHECK(s.buffer == 0);
    CHECK(s.pick_progress == 1);
    s = warehouse_step(s, WAction::DoRole, WAction::Idle);
    CHECK(s.buffer == 1);
    CHECK(s.picks == 1);
    CHECK(s.picker.score_tenths == -10 + 100);
    CHECK(s.packer.score_tenths == -30);
    // Pack draws on the buffer as it stood at the start of the epoch.
    s = warehouse_step(s, WAction::DoRole, WAction::DoRole);
    CHECK(s.buffer == 0);
    CHECK(s.packs == 1);
    CHECK_THROWS_AS(warehouse_step(s, WAction::Idle, WAction::DoRole), ActionSpaceError);
    CHECK_THROWS_AS(warehouse_step(s, WAction::DoOther, WAction::Idle), ActionSpaceError);
}

TEST_CASE("warehouse contention") {
    auto s = warehouse_initial(warehouse_params_from_json(json::object()));
    auto n = warehouse_step(s, WAction::DoRole, WAction::DoOther);
    CHECK(n.picker.effective == "pick");
    CHECK(n.packer.effective == "idle");
    CHECK(n.packer.score_tenths == -10);
    CHECK(n.events.size() == 2);

    s = warehouse_initial(warehouse_params_from_json(json{{"initial_buffer", 1}}));
    n = warehouse_step(s, WAction::DoOther, WAction::DoRole);
    CHECK(n.packer.effective == "pack");
    CHECK(n.picker.effective == "idle");

    s = warehouse_initial(warehouse_params_from_json(json{{"initial_buffer", 1}, {"contention", "first_declared"}}));
    n = warehouse_step(s, WAction::DoOther, WAction::DoRole);
    CHECK(n.picker.effective == "pack");
    CHECK(n.packer.effective == "idle");
    CHECK(n.picker.score_tenths == 100);
}

TEST_CASE("warehouse parameter validation") {
    CHECK_THROWS_AS(warehouse_params_from_json(json{{"pick_epochs", 1}, {"pack_epochs", 1}}), ConfigError);
    CHECK_THROWS_AS(warehouse_params_from_json(json{{"delta", 0}}), ConfigError);
    CHECK_THROWS_AS(warehouse_params_from_json(json{{"contention", "coin"}}), ConfigError);
    CHECK_THROWS_AS(waction_from_string("rest"), ActionSpaceError);
    CHECK(to_string(waction_from_string("do_other")) == "do_other");
}

TEST_CASE("warehouse env rejects a pack on an empty buffer") {
    WarehouseEnv e(json{{"horizon", 3}});
    policy::PolicyMap p;
    p["Picker"] = fixed(json{{"action", "do_role"}});
    p["Packer"] = fixed(json{{"action", "do_role"}});
    const auto t = kernel::run_episode(e, p, kernel::EpisodeOptions{"w", json::object(), 1, 5});
    CHECK(kernel::is_protocol_violation(t));
    CHECK(t.outcome.at("agent") == "Packer");
    CHECK(t.rounds.empty());

    WarehouseEnv ok(json{{"horizon", 3}});
    p["Packer"] = fixed(json{{"action", "idle"}});
    const auto u = kernel::run_episode(ok, p, kernel::EpisodeOptions{"w", json::object(), 1, 5});
    CHECK(u.outcome.at("reason") == "horizon");
    CHECK(u.rounds.size() == 3);
    CHECK(ok.state().picks == 1);
}
