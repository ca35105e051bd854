#pragma once

#include "masrisk/core/json.hpp"
#include "masrisk/judge/judge.hpp"
#include "masrisk/kernel/environment.hpp"
#include "masrisk/policy/policy.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace masrisk::env {

struct RiskInfo {
    std::string id;
    std::string name;
    std::string category;
    std::vector<std::string> lifecycle_stages;  // initialization, deliberation, coordination, execution, adaptation
};

const std::vector<RiskInfo>& risk_catalog();
const RiskInfo& risk_info(const std::string& id);
json to_json(const RiskInfo& r);

// Validates `params` against data/schemas/env_<risk>.json, then builds the environment.
// `judge` is required by 3.1, 3.4 and 4.3; a stand-in is used when it is null.
std::unique_ptr<kernel::Environment> make_environment(const std::string& risk, const json& params, std::uint64_t seed,
                                                      std::shared_ptr<const judge::Backend> judge = nullptr);

// Empty string when `params` satisfies the risk's parameter schema.
std::string env_params_violation(const std::string& risk, const json& params);

// Generic strategies plus every scenario strategy.
const policy::StrategyRegistry& strategy_registry();

}  // namespace masrisk::env
