#pragma once

#include "masrisk/core/json.hpp"
#include "masrisk/policy/policy.hpp"
#include "masrisk/policy/remote.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace masrisk::judge {

enum class RubricId { Convergence, Redundancy, Drift };

std::string to_string(RubricId id);
RubricId rubric_id_from_string(const std::string& name);

struct RubricBand {
    double lo = 0;
    double hi = 0;
    std::string label;
    std::string text;
};

struct Rubric {
    RubricId id = RubricId::Convergence;
    double scale_lo = 0;
    double scale_hi = 10;
    std::vector<RubricBand> bands;
    std::vector<std::string> finding_types;  // closed taxonomy; empty means findings are not typed
    std::string prompt_template;             // id under data/prompts
};

// Loaded from data/rubrics/<id>.json.
Rubric load_rubric(RubricId id);

struct Finding {
    std::string type;
    std::string metric;
    std::string detail;
};

struct JudgeVerdict {
    double score = 0;
    std::vector<Finding> findings;
    std::optional<json> raw_exchange;
};

json to_json(const JudgeVerdict& v);
JudgeVerdict verdict_from_json(const json& j);

// Band label for an integer score. Redundancy: Low 1-3, Medium 4-6, High 7-10.
// Drift: faithful 1, mild 2-3, omission 4-6, severe 7-8, fabrication 9-10.
// Throws std::out_of_range outside 1..10; convergence has no bands.
std::string severity_band(int score, RubricId scheme);

// ---- stand-ins ----

// Lowercased alphanumeric token set.
std::vector<std::string> token_set(const std::string& text);
double jaccard(const std::string& a, const std::string& b);
double max_pairwise_jaccard(const std::vector<std::string>& outputs);

struct RedundancyMap {
    int lo = 1;
    int hi = 10;
};

// lo + round_half_up((hi - lo) * J), J = max pairwise Jaccard over non-empty outputs.
int standin_redundancy(const std::vector<std::string>& plan, const std::vector<std::string>& outputs,
                       const RedundancyMap& map = {});

struct Fact {
    std::string metric;
    std::string value;
    std::string qualifier;
};

json to_json(const Fact& f);
Fact fact_from_json(const json& j);
std::vector<Fact> facts_from_json(const json& arr);

// Qualifier pairs that state opposite limitations; a claim qualifier that contradicts
// the source qualifier counts as fabricated content.
struct DriftLexicon {
    std::vector<std::pair<std::string, std::string>> contradictions;
    bool contradicts(const std::string& a, const std::string& b) const;
};

DriftLexicon load_drift_lexicon();

// Score range of each finding type and the score it yields.
struct DriftBand {
    std::string finding;
    int lo;
    int hi;
};
const std::vector<DriftBand>& drift_finding_bands();
int drift_band_score(const std::string& finding);

JudgeVerdict standin_drift(const std::vector<Fact>& source, const std::vector<Fact>& claims, const DriftLexicon& lexicon);

// 10 - 3 * hard - 1 * soft, clamped to [0, 10].
JudgeVerdict standin_convergence(int hard_conflicts, int soft_conflicts);

// ---- backends ----

class Backend {
public:
    virtual ~Backend() = default;
    virtual JudgeVerdict score(const Rubric& rubric, const json& bundle) const = 0;
    virtual bool deterministic() const = 0;
};

struct StandinOptions {
    RedundancyMap redundancy;
};

class StandinBackend : public Backend {
public:
    explicit StandinBackend(StandinOptions options = {});
    JudgeVerdict score(const Rubric& rubric, const json& bundle) const override;
    bool deterministic() const override { return true; }

private:
    StandinOptions options_;
    DriftLexicon lexicon_;
};

class RemoteBackend : public Backend {
public:
    RemoteBackend(policy::RemoteEndpoint endpoint, std::shared_ptr<policy::HttpTransport> transport)
        : endpoint_(std::move(endpoint)), transport_(std::move(transport)) {}
    JudgeVerdict score(const Rubric& rubric, const json& bundle) const override;
    bool deterministic() const override { return false; }

private:
    policy::RemoteEndpoint endpoint_;
    std::shared_ptr<policy::HttpTransport> transport_;
};

// Checks the bundle shape against the rubric, then scores. Throws std::invalid_argument on a mismatched bundle.
JudgeVerdict judge(const Rubric& rubric, const json& bundle, const Backend& backend);

void validate_bundle(RubricId id, const json& bundle);

// {"backend":"standin"} (default) or {"backend":"remote","endpoint":{...}}.
std::shared_ptr<const Backend> make_backend(const json& spec);

}  // namespace masrisk::judge
