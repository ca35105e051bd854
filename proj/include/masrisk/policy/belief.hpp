#pragma once

#include <map>
#include <string>
#include <vector>

namespace masrisk::policy {

struct Belief {
    std::vector<std::string> support;
    std::vector<double> mass;
};

using Matrix = std::vector<std::vector<double>>;

// T(s'|s,a) per action; the "*" entry is used for actions without their own matrix.
using TransitionModel = std::map<std::string, Matrix>;

struct ObservationModel {
    std::vector<std::string> symbols;
    Matrix likelihood;  // [state][symbol] = O(o | s)
};

// posterior(s') is proportional to O(o|s') * sum_s b(s) T(s'|s,a).
Belief bayes_update(const Belief& prior, const TransitionModel& transition, const ObservationModel& obs_model,
                    const std::string& action, const std::string& observation);

void validate_belief(const Belief& b);

}  // namespace masrisk::policy
