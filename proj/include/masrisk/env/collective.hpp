#pragma once

#include "masrisk/env/common.hpp"
#include "masrisk/judge/judge.hpp"
#include "masrisk/policy/policy.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace masrisk::env {

// ---------------- Risk 2.1: deliberation with an aggregator ----------------

inline const std::string kTie = "TIE";

struct Judgment {
    std::string agent;
    std::string stance;
    double confidence = 1.0;
    std::vector<std::string> evidence;
};

struct DeliberationRound {
    int round = 0;
    std::vector<Judgment> reports;
    std::string majority;  // plurality stance, or kTie
    std::string decision;
    bool conformist_error = false;
    bool misclassified = false;
};

struct DeliberationState {
    std::string ground_truth;
    std::vector<std::string> options;
    std::map<std::string, int> composition;  // faction prefix -> count
    std::optional<std::string> aggregator_prior;
    std::vector<DeliberationRound> rounds;
};

json to_json(const DeliberationState& s);

// Plurality over stances; kTie when the top count is shared.
std::string plurality(const std::vector<Judgment>& reports, const std::vector<std::string>& options);
DeliberationState deliberation_round(const DeliberationState& s, const std::vector<Judgment>& reports,
                                     const std::string& decision);

class DeliberationEnv : public BaseEnvironment {
public:
    // params: {"ground_truth":"Fake", "options":["True","Fake"], "composition":{"F":7,"D":3},
    //          "aggregator_prior":"True"|null, "horizon":3}
    explicit DeliberationEnv(const json& params);

    std::optional<Turn> next_turn(int round, const std::vector<TurnRecord>& earlier) const override;
    json observe(const Turn& turn, int round, const std::vector<TurnRecord>& earlier) const override;
    void check_action(const Turn& turn, int round, const json& action, const std::vector<TurnRecord>& earlier) const override;
    std::optional<json> apply(int round, const std::vector<TurnRecord>& turns) override;
    json snapshot() const override { return to_json(state_); }
    json outcome() const override;

private:
    std::size_t aggregator() const { return roster_.size() - 1; }
    std::vector<Judgment> judgments(const std::vector<TurnRecord>& turns) const;

    DeliberationState state_;
    std::map<std::string, std::string> faction_of_;
    int horizon_;
};

// ---------------- Risk 2.2: authority-cued sequential pipeline ----------------

struct AuthorityReport {
    std::string recommended;
    std::vector<std::string> evidence;
    int authority = 0;  // 1 for an authority-labeled report
};

json to_json(const AuthorityReport& r);

struct WeightRule {
    double base = 1.0;
    double authority = 3.0;
    std::string tie_break = "A";  // guideline-consistent action
};

struct WeightedResult {
    std::string action;
    std::string evidence_action;  // argmax of the posterior alone
    bool deference = false;
};

WeightedResult weighted_decision(const std::vector<AuthorityReport>& reports, const std::map<std::string, double>& posterior,
                                 const WeightRule& rule);

inline const std::vector<std::string> kClinicalRoles = {"enrich", "guideline", "authority", "audit", "summarize"};

class ClinicalPipelineEnv : public BaseEnvironment {
public:
    // params: {"case":"clinical_case" | {...}, "authority_cue":true, "authority_stage":3}
    explicit ClinicalPipelineEnv(const json& params);

    std::optional<Turn> next_turn(int round, const std::vector<TurnRecord>& earlier) const override;
    json observe(const Turn& turn, int round, const std::vector<TurnRecord>& earlier) const override;
    void check_action(const Turn& turn, int round, const json& action, const std::vector<TurnRecord>& earlier) const override;
    std::optional<json> apply(int round, const std::vector<TurnRecord>& turns) override;
    json snapshot() const override { return snapshot_; }
    json outcome() const override;

private:
    AuthorityReport report_of(const TurnRecord& t) const;

    json case_;
    std::map<std::string, double> posterior_;
    bool authority_cue_;
    std::size_t authority_stage_;
    json snapshot_ = json::object();
};

// ---------------- Risk 3.1: norm negotiation ----------------

struct Clause {
    std::string id;
    std::string kind;  // interval | exclusive | binary
    bool hard = false;
    std::string resource;  // interval, exclusive
    std::string activity;  // interval
    int start = 0;         // interval, minutes
    int end = 0;
    std::string holder;  // exclusive
    std::string rule;    // binary
    bool value = false;  // binary
};

json to_json(const Clause& c);
Clause clause_from_json(const json& j);

struct NormProfile {
    std::vector<std::string> permissible;
    std::vector<std::string> preference;  // ranked, best first
    std::vector<Clause> clauses;          // opening position
};

NormProfile norm_profile_from_json(const json& j);
// Preference order must rank every permissible action exactly once.
void validate_profile(const NormProfile& p);

struct Conflict {
    std::string agent_a;
    std::string agent_b;
    Clause a;
    Clause b;
    bool hard = false;
};

json to_json(const Conflict& c);

// Syntactic clash between two clauses held by different agents.
bool clauses_clash(const Clause& a, const Clause& b);
std::vector<Conflict> find_conflicts(const std::vector<std::pair<std::string, std::vector<Clause>>>& positions);
// Adjusted version of the second clause that no longer clashes with the first.
Clause compromise_for(const Conflict& c);

enum class NormMode { SummarizeOnly, Mediate };

struct NormSummary {
    int round = 0;
    json positions = json::object();
    std::vector<Conflict> conflicts;
    std::vector<json> compromises;  // {"to": agent, "clause": clause}
    judge::JudgeVerdict verdict;
};

json to_json(const NormSummary& s);

NormSummary norm_round(int round, const std::vector<std::pair<std::string, json>>& proposals, NormMode mode,
                       const judge::Rubric& rubric, const judge::Backend& backend);

class NormNegotiationEnv : public BaseEnvironment {
public:
    // params: {"mode":"summarize"|"mediate", "horizon":10}
    NormNegotiationEnv(const json& params, std::shared_ptr<const judge::Backend> backend);

    bool needs_policy(std::size_t agent) const override { return agent < 3; }
    std::optional<Turn> next_turn(int round, const std::vector<TurnRecord>& earlier) const override;
    json observe(const Turn& turn, int round, const std::vector<TurnRecord>& earlier) const override;
    void check_action(const Turn& turn, int round, const json& action, const std::vector<TurnRecord>& earlier) const override;
    std::optional<json> apply(int round, const std::vector<TurnRecord>& turns) override;
    json snapshot() const override;
    json outcome() const override;

private:
    NormMode mode_;
    int horizon_;
    std::shared_ptr<const judge::Backend> backend_;
    judge::Rubric rubric_;
    std::optional<NormSummary> last_;
};

void register_collective_strategies(policy::StrategyRegistry& registry);

}  // namespace masrisk::env
