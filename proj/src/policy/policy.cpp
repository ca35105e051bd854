#include "masrisk/policy/policy.hpp"

#include "masrisk/core/data_dir.hpp"
#include "masrisk/core/digest.hpp"
#include "masrisk/policy/remote.hpp"
#include "masrisk/policy/schema.hpp"

#include <set>

namespace masrisk::policy {

json to_json(const Observation& obs) {
    return json{{"round", obs.round}, {"phase", obs.phase}, {"broadcast_state", obs.broadcast_state}, {"inbox", obs.inbox}};
}

json to_json(const RemoteExchange& ex) {
    return json{{"agent", ex.agent},   {"round", ex.round},   {"attempt", ex.attempt},         {"request", ex.request},
                {"status", ex.status}, {"error", ex.error}, {"response_body", ex.response_body}};
}

std::string observation_digest(const Observation& obs) { return sha256_hex(canonical_dump(obs.broadcast_state)).substr(0, 16); }

void require_history_aligned(const Observation& obs, const LocalHistory& history) {
    if (static_cast<std::size_t>(obs.round) != history.size() + 1) {
        throw std::logic_error("observation round " + std::to_string(obs.round) + " does not follow a history of " +
                               std::to_string(history.size()) + " rounds");
    }
}

ScriptedPolicy ScriptedPolicy::constant(json action) { return ScriptedPolicy({ScriptEntry{0, "*", "", std::move(action)}}); }

ScriptedPolicy ScriptedPolicy::sequence(const std::vector<json>& per_round) {
    std::vector<ScriptEntry> table;
    for (std::size_t i = 0; i < per_round.size(); ++i) {
        table.push_back(ScriptEntry{static_cast<int>(i) + 1, "*", "", per_round[i]});
    }
    return ScriptedPolicy(std::move(table));
}

json ScriptedPolicy::act(const Observation& obs, const LocalHistory& history, ActContext& ctx) const {
    (void)ctx;
    require_history_aligned(obs, history);
    const std::string digest = observation_digest(obs);
    const ScriptEntry* best = nullptr;
    int best_rank = -1;
    for (const auto& e : table_) {
        if (e.round != 0 && e.round != obs.round) continue;
        if (e.digest != "*" && e.digest != digest) continue;
        if (!e.phase.empty() && e.phase != obs.phase) continue;
        const int rank = (e.round != 0 ? 4 : 0) + (e.digest != "*" ? 2 : 0) + (!e.phase.empty() ? 1 : 0);
        if (rank > best_rank) {
            best = &e;
            best_rank = rank;
        }
    }
    if (best == nullptr) {
        throw PolicyError("script", "no script entry for round " + std::to_string(obs.round) + " phase '" + obs.phase +
                                        "' digest " + digest);
    }
    return best->action;
}

bool ScriptedPolicy::is_total(int horizon, const std::vector<std::string>& phases) const {
    for (int r = 1; r <= horizon; ++r) {
        for (const auto& ph : phases) {
            bool covered = false;
            for (const auto& e : table_) {
                if ((e.round == 0 || e.round == r) && e.digest == "*" && (e.phase.empty() || e.phase == ph)) covered = true;
            }
            if (!covered) return false;
        }
    }
    return true;
}

json StateMachinePolicy::act(const Observation& obs, const LocalHistory& history, ActContext& ctx) const {
    require_history_aligned(obs, history);
    return fn_(params_, obs, history, ctx.rng);
}

void StrategyRegistry::add(const std::string& name, StrategyFn fn) {
    if (!fns_.emplace(name, std::move(fn)).second) {
        throw std::logic_error("strategy '" + name + "' registered twice");
    }
}

const StrategyFn& StrategyRegistry::get(const std::string& name) const {
    auto it = fns_.find(name);
    if (it == fns_.end()) throw std::invalid_argument("unknown strategy '" + name + "'");
    return it->second;
}

std::vector<std::string> StrategyRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : fns_) out.push_back(k);
    return out;
}

void register_generic_strategies(StrategyRegistry& registry) {
    registry.add("constant", [](const json& p, const Observation&, const LocalHistory&, Rng&) { return p.at("action"); });
    registry.add("cycle", [](const json& p, const Observation& obs, const LocalHistory&, Rng&) {
        const auto& actions = p.at("actions");
        if (actions.empty()) throw std::invalid_argument("cycle: empty action list");
        return actions.at(static_cast<std::size_t>(obs.round - 1) % actions.size());
    });
    registry.add("random_choice", [](const json& p, const Observation&, const LocalHistory&, Rng& rng) {
        const auto& choices = p.at("choices");
        if (choices.empty()) throw std::invalid_argument("random_choice: empty choice list");
        return choices.at(rng.below(choices.size()));
    });
}

PolicyPtr make_policy(const json& spec, const StrategyRegistry& registry, std::shared_ptr<HttpTransport> transport) {
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "constant") {
        return std::make_shared<ScriptedPolicy>(ScriptedPolicy::constant(spec.at("action")));
    }
    if (kind == "sequence") {
        return std::make_shared<ScriptedPolicy>(ScriptedPolicy::sequence(spec.at("actions").get<std::vector<json>>()));
    }
    if (kind == "scripted") {
        std::vector<ScriptEntry> table;
        for (const auto& e : spec.at("table")) {
            table.push_back(ScriptEntry{e.value("round", 0), e.value("digest", std::string("*")), e.value("phase", std::string()),
                                        e.at("action")});
        }
        return std::make_shared<ScriptedPolicy>(std::move(table));
    }
    if (kind == "strategy") {
        const std::string name = spec.at("name").get<std::string>();
        return std::make_shared<StateMachinePolicy>(name, spec.value("params", json::object()), registry.get(name));
    }
    if (kind == "remote") {
        RemoteEndpoint endpoint = endpoint_from_json(spec.value("endpoint", json::object()));
        const std::string tmpl = read_text_file(data_dir() / "prompts" / (spec.at("template").get<std::string>() + ".txt"));
        json schema = load_schema(spec.at("schema").get<std::string>());
        if (!transport) transport = std::make_shared<HttplibTransport>();
        return std::make_shared<RemotePolicy>(std::move(endpoint), tmpl, std::move(schema), std::move(transport));
    }
    throw std::invalid_argument("unknown policy kind '" + kind + "'");
}

}  // namespace masrisk::policy
