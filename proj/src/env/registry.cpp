#include "masrisk/env/registry.hpp"

#include "masrisk/env/collective.hpp"
#include "masrisk/env/governance.hpp"
#include "masrisk/env/strategic.hpp"
#include "masrisk/env/structural.hpp"
#include "masrisk/policy/schema.hpp"

#include <algorithm>

namespace masrisk::env {

const std::vector<RiskInfo>& risk_catalog() {
    static const std::vector<RiskInfo> catalog = {
        {"1.1", "Tacit Collusion", "incentive", {"coordination", "adaptation"}},
        {"1.2", "Priority Monopolization", "incentive", {"coordination"}},
        {"1.3", "Competitive Task Avoidance", "incentive", {"coordination", "execution", "adaptation"}},
        {"1.4", "Strategic Information Withholding or Misreporting", "incentive", {"coordination", "execution"}},
        {"1.5", "Information Asymmetry Exploitation", "incentive", {"initialization", "coordination"}},
        {"2.1", "Majority Sway Bias", "collective", {"deliberation"}},
        {"2.2", "Authority Deference Bias", "collective", {"deliberation"}},
        {"3.1", "Non-convergence without an Arbitrator", "governance", {"initialization", "deliberation"}},
        {"3.2", "Over-adherence to Initial Instructions", "governance", {"initialization", "execution"}},
        {"3.3", "Architecturally Induced Clarification Failure", "governance", {"deliberation", "execution"}},
        {"3.4", "Role Allocation Failure", "governance", {"initialization", "execution"}},
        {"3.5", "Role Stability under Incentive Pressure", "governance", {"execution", "adaptation"}},
        {"4.1", "Competitive Resource Overreach", "structural", {"coordination", "execution", "adaptation"}},
        {"4.2", "Steganography", "structural", {"initialization", "adaptation"}},
        {"4.3", "Semantic Drift in Sequential Handoffs", "structural", {"deliberation", "execution"}},
    };
    return catalog;
}

const RiskInfo& risk_info(const std::string& id) {
    for (const auto& r : risk_catalog()) {
        if (r.id == id) return r;
    }
    throw kernel::ConfigError("unknown risk id '" + id + "'");
}

json to_json(const RiskInfo& r) {
    return json{{"id", r.id}, {"name", r.name}, {"category", r.category}, {"lifecycle_stages", r.lifecycle_stages}};
}

namespace {

std::string schema_id(const std::string& risk) {
    std::string s = "env_" + risk;
    std::replace(s.begin(), s.end(), '.', '_');
    return s;
}

}  // namespace

std::string env_params_violation(const std::string& risk, const json& params) {
    risk_info(risk);
    return policy::schema_violation(policy::load_schema(schema_id(risk)), params).value_or(std::string());
}

std::unique_ptr<kernel::Environment> make_environment(const std::string& risk, const json& params, std::uint64_t seed,
                                                      std::shared_ptr<const judge::Backend> judge) {
    const std::string why = env_params_violation(risk, params);
    if (!why.empty()) throw kernel::ConfigError("parameters for risk " + risk + ": " + why);
    if (!judge) judge = judge::make_backend(json::object());
    if (risk == "1.1") return std::make_unique<BertrandEnv>(params);
    if (risk == "1.2") return std::make_unique<GpuQueueEnv>(params);
    if (risk == "1.3") return std::make_unique<ClaimEnv>(params);
    if (risk == "1.4") return std::make_unique<RelayEnv>(params, seed);
    if (risk == "1.5") return std::make_unique<NegotiationEnv>(params);
    if (risk == "2.1") return std::make_unique<DeliberationEnv>(params);
    if (risk == "2.2") return std::make_unique<ClinicalPipelineEnv>(params);
    if (risk == "3.1") return std::make_unique<NormNegotiationEnv>(params, judge);
    if (risk == "3.2") return std::make_unique<TradingEnv>(params);
    if (risk == "3.3") return std::make_unique<ClarificationEnv>(params);
    if (risk == "3.4") return std::make_unique<AllocationEnv>(params, judge);
    if (risk == "3.5") return std::make_unique<WarehouseEnv>(params);
    if (risk == "4.1") return std::make_unique<ComputeEnv>(params);
    if (risk == "4.2") return std::make_unique<StegoEnv>(params);
    return std::make_unique<DriftEnv>(params, judge);
}

const policy::StrategyRegistry& strategy_registry() {
    static const policy::StrategyRegistry registry = [] {
        policy::StrategyRegistry r;
        policy::register_generic_strategies(r);
        register_strategic_strategies(r);
        register_collective_strategies(r);
        register_governance_strategies(r);
        register_structural_strategies(r);
        return r;
    }();
    return registry;
}

}  // namespace masrisk::env
