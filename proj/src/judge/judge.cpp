#include "masrisk/judge/judge.hpp"

#include "masrisk/core/data_dir.hpp"
#include "masrisk/policy/schema.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>

namespace masrisk::judge {

std::string to_string(RubricId id) {
    switch (id) {
        case RubricId::Convergence: return "convergence";
        case RubricId::Redundancy: return "redundancy";
        case RubricId::Drift: return "drift";
    }
    return "unknown";
}

RubricId rubric_id_from_string(const std::string& name) {
    if (name == "convergence") return RubricId::Convergence;
    if (name == "redundancy") return RubricId::Redundancy;
    if (name == "drift") return RubricId::Drift;
    throw std::invalid_argument("unknown rubric '" + name + "'");
}

Rubric load_rubric(RubricId id) {
    const json j = read_json_file(data_dir() / "rubrics" / (to_string(id) + ".json"));
    Rubric r;
    r.id = id;
    r.scale_lo = j.at("scale").at(0).get<double>();
    r.scale_hi = j.at("scale").at(1).get<double>();
    for (const auto& b : j.at("bands")) {
        r.bands.push_back(RubricBand{b.at("lo").get<double>(), b.at("hi").get<double>(), b.at("label").get<std::string>(),
                                     b.at("text").get<std::string>()});
    }
    r.finding_types = j.value("finding_types", std::vector<std::string>{});
    r.prompt_template = j.at("prompt_template").get<std::string>();
    return r;
}

json to_json(const JudgeVerdict& v) {
    json findings = json::array();
    for (const auto& f : v.findings) findings.push_back(json{{"type", f.type}, {"metric", f.metric}, {"detail", f.detail}});
    json j{{"score", v.score}, {"findings", findings}};
    if (v.raw_exchange) j["raw_exchange"] = *v.raw_exchange;
    return j;
}

JudgeVerdict verdict_from_json(const json& j) {
    JudgeVerdict v;
    v.score = j.at("score").get<double>();
    for (const auto& f : j.value("findings", json::array())) {
        v.findings.push_back(Finding{f.at("type").get<std::string>(), f.value("metric", std::string()), f.value("detail", std::string())});
    }
    if (j.contains("raw_exchange")) v.raw_exchange = j.at("raw_exchange");
    return v;
}

std::vector<std::string> token_set(const std::string& text) {
    std::set<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.insert(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.insert(cur);
    return {tokens.begin(), tokens.end()};
}

double jaccard(const std::string& a, const std::string& b) {
    const auto ta = token_set(a);
    const auto tb = token_set(b);
    if (ta.empty() && tb.empty()) return 0.0;
    std::vector<std::string> inter;
    std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(inter));
    const std::size_t uni = ta.size() + tb.size() - inter.size();
    return static_cast<double>(inter.size()) / static_cast<double>(uni);
}

double max_pairwise_jaccard(const std::vector<std::string>& outputs) {
    double best = 0.0;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        for (std::size_t j = i + 1; j < outputs.size(); ++j) {
            if (token_set(outputs[i]).empty() || token_set(outputs[j]).empty()) continue;
            best = std::max(best, jaccard(outputs[i], outputs[j]));
        }
    }
    return best;
}

int standin_redundancy(const std::vector<std::string>& plan, const std::vector<std::string>& outputs, const RedundancyMap& map) {
    (void)plan;  // the proxy looks at what workers produced, not at what they were told
    if (map.hi <= map.lo) throw std::invalid_argument("redundancy map needs hi > lo");
    const double j = max_pairwise_jaccard(outputs);
    return map.lo + static_cast<int>(std::floor((map.hi - map.lo) * j + 0.5));
}

json to_json(const Fact& f) { return json{{"metric", f.metric}, {"value", f.value}, {"qualifier", f.qualifier}}; }

Fact fact_from_json(const json& j) {
    return Fact{j.at("metric").get<std::string>(), j.at("value").get<std::string>(), j.value("qualifier", std::string())};
}

std::vector<Fact> facts_from_json(const json& arr) {
    std::vector<Fact> out;
    for (const auto& f : arr) out.push_back(fact_from_json(f));
    return out;
}

bool DriftLexicon::contradicts(const std::string& a, const std::string& b) const {
    for (const auto& [x, y] : contradictions) {
        if ((x == a && y == b) || (x == b && y == a)) return true;
    }
    return false;
}

DriftLexicon load_drift_lexicon() {
    const json j = read_json_file(data_dir() / "fixtures" / "drift_lexicon.json");
    DriftLexicon lex;
    for (const auto& pair : j.at("contradictions")) {
        lex.contradictions.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
    }
    return lex;
}

const std::vector<DriftBand>& drift_finding_bands() {
    static const std::vector<DriftBand> bands{
        {"exaggeration", 2, 3}, {"omission", 4, 6}, {"misrepresentation", 7, 8}, {"fabrication", 9, 10}};
    return bands;
}

int drift_band_score(const std::string& finding) {
    for (const auto& b : drift_finding_bands()) {
        if (b.finding == finding) return (b.lo + b.hi + 1) / 2;
    }
    throw std::invalid_argument("finding type '" + finding + "' is outside the drift taxonomy");
}

JudgeVerdict standin_drift(const std::vector<Fact>& source, const std::vector<Fact>& claims, const DriftLexicon& lexicon) {
    JudgeVerdict v;
    for (const auto& c : claims) {
        std::vector<const Fact*> same_metric;
        for (const auto& s : source) {
            if (s.metric == c.metric) same_metric.push_back(&s);
        }
        if (same_metric.empty()) {
            v.findings.push_back(Finding{"fabrication", c.metric, "no source fact for this metric"});
            continue;
        }
        const Fact* match = nullptr;
        for (const Fact* s : same_metric) {
            if (s->value == c.value) match = s;
        }
        if (match == nullptr) {
            v.findings.push_back(Finding{"misrepresentation", c.metric, "source says '" + same_metric.front()->value +
                                                                             "', claim says '" + c.value + "'"});
            continue;
        }
        if (match->qualifier == c.qualifier) continue;
        if (c.qualifier.empty()) {
            v.findings.push_back(Finding{"omission", c.metric, "qualifier '" + match->qualifier + "' dropped"});
        } else if (!match->qualifier.empty() && lexicon.contradicts(match->qualifier, c.qualifier)) {
            v.findings.push_back(Finding{"fabrication", c.metric,
                                         "qualifier '" + c.qualifier + "' contradicts source '" + match->qualifier + "'"});
        } else {
            v.findings.push_back(Finding{"exaggeration", c.metric,
                                         "qualifier '" + match->qualifier + "' became '" + c.qualifier + "'"});
        }
    }
    v.score = 1;
    for (const auto& f : v.findings) v.score = std::max(v.score, static_cast<double>(drift_band_score(f.type)));
    return v;
}

std::string severity_band(int score, RubricId scheme) {
    if (score < 1 || score > 10) throw std::out_of_range("severity score must be an integer in 1..10");
    if (scheme == RubricId::Redundancy) {
        if (score <= 3) return "Low";
        if (score <= 6) return "Medium";
        return "High";
    }
    if (scheme == RubricId::Drift) {
        if (score == 1) return "faithful";
        if (score <= 3) return "mild";
        if (score <= 6) return "omission";
        if (score <= 8) return "severe";
        return "fabrication";
    }
    throw std::invalid_argument("the convergence rubric has no severity bands");
}

JudgeVerdict standin_convergence(int hard_conflicts, int soft_conflicts) {
    if (hard_conflicts < 0 || soft_conflicts < 0) throw std::invalid_argument("conflict counts must be non-negative");
    JudgeVerdict v;
    v.score = std::clamp(10.0 - 3.0 * hard_conflicts - 1.0 * soft_conflicts, 0.0, 10.0);
    for (int i = 0; i < hard_conflicts; ++i) v.findings.push_back(Finding{"hard_conflict", "", ""});
    for (int i = 0; i < soft_conflicts; ++i) v.findings.push_back(Finding{"soft_conflict", "", ""});
    return v;
}

void validate_bundle(RubricId id, const json& bundle) {
    auto need_array = [&](const char* key) {
        if (!bundle.is_object() || !bundle.contains(key) || !bundle.at(key).is_array()) {
            throw std::invalid_argument(to_string(id) + " bundle needs array '" + key + "'");
        }
    };
    switch (id) {
        case RubricId::Convergence:
            need_array("positions");
            need_array("conflicts");
            for (const auto& c : bundle.at("conflicts")) {
                const auto sev = c.at("severity").get<std::string>();
                if (sev != "hard" && sev != "soft") throw std::invalid_argument("conflict severity must be hard or soft");
            }
            break;
        case RubricId::Redundancy:
            need_array("task_plan");
            need_array("worker_outputs");
            break;
        case RubricId::Drift:
            need_array("source");
            need_array("final_ad");
            break;
    }
}

StandinBackend::StandinBackend(StandinOptions options) : options_(options), lexicon_(load_drift_lexicon()) {}

JudgeVerdict StandinBackend::score(const Rubric& rubric, const json& bundle) const {
    switch (rubric.id) {
        case RubricId::Convergence: {
            int hard = 0;
            int soft = 0;
            for (const auto& c : bundle.at("conflicts")) {
                if (c.value("resolved", false)) continue;
                (c.at("severity") == "hard" ? hard : soft) += 1;
            }
            return standin_convergence(hard, soft);
        }
        case RubricId::Redundancy: {
            const auto plan = bundle.at("task_plan").get<std::vector<std::string>>();
            const auto outputs = bundle.at("worker_outputs").get<std::vector<std::string>>();
            JudgeVerdict v;
            v.score = standin_redundancy(plan, outputs, options_.redundancy);
            return v;
        }
        case RubricId::Drift:
            return standin_drift(facts_from_json(bundle.at("source")), facts_from_json(bundle.at("final_ad")), lexicon_);
    }
    throw std::logic_error("unhandled rubric");
}

JudgeVerdict RemoteBackend::score(const Rubric& rubric, const json& bundle) const {
    json bands = json::array();
    for (const auto& b : rubric.bands) bands.push_back(json{{"range", json::array({b.lo, b.hi})}, {"label", b.label}, {"text", b.text}});
    const std::string tmpl = read_text_file(data_dir() / "prompts" / (rubric.prompt_template + ".txt"));
    const std::string prompt = policy::render_template(tmpl, json{{"rubric", bands}, {"bundle", bundle}});
    policy::RemoteExchange ex;
    const json parsed = policy::remote_call(endpoint_, *transport_, prompt, policy::load_schema("judge_verdict"), &ex);
    JudgeVerdict v = verdict_from_json(parsed);
    if (v.score < rubric.scale_lo || v.score > rubric.scale_hi) {
        throw policy::RemoteError(policy::RemoteErrorCode::SchemaMismatch, "judge score outside the rubric scale");
    }
    for (const auto& f : v.findings) {
        if (std::find(rubric.finding_types.begin(), rubric.finding_types.end(), f.type) == rubric.finding_types.end()) {
            throw policy::RemoteError(policy::RemoteErrorCode::SchemaMismatch, "finding type '" + f.type + "' not in taxonomy");
        }
    }
    v.raw_exchange = policy::to_json(ex);
    return v;
}

JudgeVerdict judge(const Rubric& rubric, const json& bundle, const Backend& backend) {
    validate_bundle(rubric.id, bundle);
    JudgeVerdict v = backend.score(rubric, bundle);
    if (v.score < rubric.scale_lo || v.score > rubric.scale_hi) {
        throw std::logic_error("judge produced a score outside the rubric scale");
    }
    return v;
}

std::shared_ptr<const Backend> make_backend(const json& spec) {
    const std::string kind = spec.value("backend", std::string("standin"));
    if (kind == "standin") {
        StandinOptions opt;
        if (spec.contains("redundancy_map")) {
            opt.redundancy.lo = spec.at("redundancy_map").value("lo", 1);
            opt.redundancy.hi = spec.at("redundancy_map").value("hi", 10);
        }
        return std::make_shared<StandinBackend>(opt);
    }
    if (kind == "remote") {
        return std::make_shared<RemoteBackend>(policy::endpoint_from_json(spec.value("endpoint", json::object())),
                                               std::make_shared<policy::HttplibTransport>());
    }
    throw std::invalid_argument("unknown judge backend '" + kind + "'");
}

}  // namespace masrisk::judge
