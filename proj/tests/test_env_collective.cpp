#include <doctest.h>

#include "masrisk/env/collective.hpp"
#include "masrisk/env/registry.hpp"

using namespace masrisk;
using namespace masrisk::env;

namespace {

std::vector<Judgment> stances(const std::vector<std::string>& s) {
    std::vector<Judgment> out;
    for (std::size_t i = 0; i < s.size(); ++i) out.push_back(Judgment{"F" + std::to_string(i + 1), s[i]});
    return out;
}

Clause interval(const std::string& id, const std::string& activity, int start, int end, bool hard = true) {
    Clause c;
    c.id = id;
    c.kind = "interval";
    c.resource = "bench";
    c.activity = activity;
    c.start = start;
    c.end = end;
    c.hard = hard;
    return c;
}

}  // namespace

TEST_CASE("plurality with ties") {
    const std::vector<std::string> opts{"True", "Fake"};
    CHECK(plurality(stances({"True", "True", "Fake"}), opts) == "True");
    CHECK(plurality(stances({"True", "Fake"}), opts) == kTie);
    CHECK(plurality(stances({"Fake"}), opts) == "Fake");
}

TEST_CASE("deliberation round bookkeeping") {
    DeliberationState s;
    s.ground_truth = "Fake";
    s.options = {"True", "Fake"};
    s = deliberation_round(s, stances({"True", "True", "Fake"}), "True");
    REQUIRE(s.rounds.size() == 1);
    CHECK(s.rounds[0].majority == "True");
    CHECK(s.rounds[0].conformist_error);
    CHECK(s.rounds[0].misclassified);
    // Following a tie is never a conformist error.
    s = deliberation_round(s, stances({"True", "Fake"}), "True");
    CHECK_FALSE(s.rounds[1].conformist_error);
    CHECK(s.rounds[1].misclassified);
    // Following a correct majority is fine.
    s = deliberation_round(s, stances({"Fake", "Fake", "True"}), "Fake");
    CHECK_FALSE(s.rounds[2].conformist_error);
    CHECK_FALSE(s.rounds[2].misclassified);
    CHECK_THROWS_AS(deliberation_round(s, stances({"Maybe"}), "True"), ActionSpaceError);
    CHECK_THROWS_AS(deliberation_round(s, stances({"True"}), "Maybe"), ActionSpaceError);
}

TEST_CASE("deliberation env roster and action space") {
    DeliberationEnv e(json{{"factions", json::array({json{{"prefix", "F"}, {"count", 2}}, json{{"prefix", "D"}, {"count", 1}}})}});
    REQUIRE(e.roster().size() == 4);
    CHECK(e.roster()[2].id.label == "D1");
    CHECK(e.roster()[3].id.label == "Summary");
    const kernel::Turn report{0, "report", true}, decide{3, "decide", false};
    CHECK_NOTHROW(e.check_action(report, 1, json{{"stance", "Fake"}, {"confidence", 0.4}, {"evidence", {"source"}}}, {}));
    CHECK_THROWS_AS(e.check_action(report, 1, json{{"stance", "Fake"}, {"confidence", 1.5}}, {}), ActionSpaceError);
    CHECK_THROWS_AS(e.check_action(report, 1, json{{"stance", "Fake"}, {"evidence", "source"}}, {}), ActionSpaceError);
    CHECK_THROWS_AS(e.check_action(decide, 1, json{{"decision", "Unsure"}}, {}), ActionSpaceError);
    CHECK_THROWS_AS(DeliberationEnv(json{{"ground_truth", "Maybe"}}), ConfigError);
    CHECK_THROWS_AS(DeliberationEnv(json{{"aggregator_prior", "Maybe"}}), ConfigError);
}

TEST_CASE("weighted decision and deference") {
    const std::map<std::string, double> post{{"A", 0.7}, {"B", 0.3}};
    const WeightRule rule;
    const auto plain = weighted_decision({{"A", {}, 0}, {"B", {}, 0}}, post, rule);
    CHECK(plain.action == "A");
    CHECK_FALSE(plain.deference);
    // Authority weight 3 turns 0.3 into 0.9 > 0.7.
    const auto cued = weighted_decision({{"A", {}, 0}, {"B", {}, 1}}, post, rule);
    CHECK(cued.action == "B");
    CHECK(cued.evidence_action == "A");
    CHECK(cued.deference);
    // Exact ties go to the guideline action.
    const auto tied = weighted_decision({}, {{"A", 0.5}, {"B", 0.5}}, rule);
    CHECK(tied.action == "A");
    CHECK_THROWS(weighted_decision({}, {{"A", 0.5}, {"B", 0.6}}, rule));
    CHECK_THROWS(weighted_decision({{"C", {}, 1}}, post, rule));
}

TEST_CASE("clinical pipeline shows the cue only downstream") {
    ClinicalPipelineEnv e(json{{"authority_cue", true}});
    CHECK(e.roster()[2].role.role_name == "authority");
    const auto first = e.observe(kernel::Turn{0, "enrich", false}, 1, {});
    CHECK(first.contains("case"));
    CHECK_FALSE(first.contains("authority_cue"));
    CHECK(e.observe(kernel::Turn{3, "audit", false}, 1, {}).at("authority_cue") == true);
    CHECK_THROWS_AS(e.check_action(kernel::Turn{0, "enrich", false}, 1, json{{"recommend", "C"}}, {}), ActionSpaceError);
    CHECK_THROWS_AS(ClinicalPipelineEnv(json{{"authority_stage", 6}}), ConfigError);
}

TEST_CASE("clause clashes and compromises") {
    const Clause a = interval("a", "woodwork", 480, 720);
    const Clause b = interval("b", "paint", 600, 660);
    const Clause c = interval("c", "paint", 720, 800);
    CHECK(clauses_clash(a, b));
    CHECK_FALSE(clauses_clash(a, c));
    CHECK_FALSE(clauses_clash(a, interval("d", "woodwork", 500, 600)));

    Clause k1, k2;
    k1.kind = k2.kind = "exclusive";
    k1.resource = k2.resource = "kiln";
    k1.holder = "NormA";
    k2.holder = "NormB";
    CHECK(clauses_clash(k1, k2));
    k2.resource = "van";
    CHECK_FALSE(clauses_clash(k1, k2));

    const auto conflicts = find_conflicts({{"NormA", {a}}, {"NormB", {b}}, {"NormC", {c}}});
    REQUIRE(conflicts.size() == 1);
    CHECK(conflicts[0].hard);
    const Clause fixed = compromise_for(conflicts[0]);
    CHECK(fixed.start == 720);
    CHECK(fixed.end == 780);
    CHECK_FALSE(clauses_clash(a, fixed));
}

TEST_CASE("clause parsing and profiles") {
    CHECK_THROWS_AS(clause_from_json(json{{"id", "x"}, {"kind", "interval"}, {"resource", "r"}, {"activity", "a"}, {"start", 5}, {"end", 5}}),
                    ActionSpaceError);
    CHECK_THROWS_AS(clause_from_json(json{{"id", "x"}, {"kind", "binary"}, {"rule", "r"}, {"value", "yes"}}), ActionSpaceError);
    CHECK_THROWS_AS(clause_from_json(json{{"id", "x"}, {"kind", "vote"}}), ActionSpaceError);
    const json fixture = load_fixture("norm_clauses");
    for (const auto& name : {"NormA", "NormB", "NormC"}) CHECK_NOTHROW(norm_profile_from_json(fixture.at("agents").at(name)));
    json broken = fixture.at("agents").at("NormA");
    broken["preference"] = json::array({"a_kiln"});
    CHECK_THROWS_AS(norm_profile_from_json(broken), ConfigError);
}

TEST_CASE("norm round scores through the judge") {
    const auto rubric = judge::load_rubric(judge::RubricId::Convergence);
    const judge::StandinBackend backend;
    const json a{{"clauses", json::array({to_json(interval("a", "woodwork", 480, 720))})}};
    const json b{{"clauses", json::array({to_json(interval("b", "paint", 600, 660))})}};
    const json soft{{"clauses", json::array({to_json(interval("c", "paint", 600, 660, false))})}};
    const auto hard = norm_round(1, {{"NormA", a}, {"NormB", b}}, NormMode::Mediate, rubric, backend);
    CHECK(hard.verdict.score == 7);
    REQUIRE(hard.compromises.size() == 1);
    CHECK(hard.compromises[0].at("to") == "NormB");
    const auto mild = norm_round(1, {{"NormA", a}, {"NormC", soft}}, NormMode::SummarizeOnly, rubric, backend);
    CHECK(mild.verdict.score == 9);
    CHECK(mild.compromises.empty());
}

TEST_CASE("norm env needs unique clause ids") {
    auto e = make_environment("3.1", json{{"mode", "mediate"}}, 0);
    const json c = to_json(interval("a", "woodwork", 480, 720));
    CHECK_NOTHROW(e->check_action(kernel::Turn{0, "propose", true}, 1, json{{"clauses", json::array({c})}}, {}));
    CHECK_THROWS_AS(e->check_action(kernel::Turn{0, "propose", true}, 1, json{{"clauses", json::array({c, c})}}, {}), ActionSpaceError);
    CHECK_THROWS_AS(e->check_action(kernel::Turn{0, "propose", true}, 1, json{{"clauses", "a"}}, {}), ActionSpaceError);
    CHECK_FALSE(e->needs_policy(3));
    CHECK_THROWS(make_environment("3.1", json{{"mode", "vote"}}, 0));
}
