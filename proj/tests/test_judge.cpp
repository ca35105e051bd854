#include <doctest.h>

#include "masrisk/judge/judge.hpp"

#include <deque>

using namespace masrisk;
using namespace masrisk::judge;

namespace {

class FakeTransport : public policy::HttpTransport {
public:
    std::deque<policy::HttpReply> replies;
    std::vector<json> requests;
    policy::HttpReply post(const std::string&, const std::string&, const std::string& body, const std::map<std::string, std::string>&,
                           int) override {
        requests.push_back(json::parse(body));
        if (replies.empty()) throw policy::RemoteError(policy::RemoteErrorCode::Timeout, "no reply");
        auto r = replies.front();
        replies.pop_front();
        return r;
    }
};

policy::HttpReply model_says(const json& verdict) { return policy::HttpReply{200, json{{"text", verdict.dump()}}.dump()}; }

policy::RemoteEndpoint test_endpoint() {
    return policy::endpoint_from_json(json{{"base_url", "http://judge.test"}, {"retry_limit", 0}, {"backoff_initial_ms", 0}});
}

std::vector<Fact> stellar() {
    return {{"water_resistance", "IP67", "fresh water only"}, {"zoom", "10x digital", "lossy"}, {"camera_resolution", "48 MP", ""}};
}

}  // namespace

TEST_CASE("rubrics load with ordered bands") {
    for (auto id : {RubricId::Convergence, RubricId::Redundancy, RubricId::Drift}) {
        const Rubric r = load_rubric(id);
        CHECK(r.id == id);
        CHECK(rubric_id_from_string(to_string(id)) == id);
        REQUIRE_FALSE(r.bands.empty());
        CHECK(r.bands.front().lo == r.scale_lo);
        CHECK(r.bands.back().hi == r.scale_hi);
        for (const auto& b : r.bands) {
            CHECK(b.lo <= b.hi);
            CHECK_FALSE(b.text.empty());
        }
        CHECK_FALSE(r.prompt_template.empty());
    }
    const auto drift = load_rubric(RubricId::Drift);
    for (const auto& b : drift_finding_bands()) {
        CHECK(std::find(drift.finding_types.begin(), drift.finding_types.end(), b.finding) != drift.finding_types.end());
    }
    CHECK_THROWS_AS(rubric_id_from_string("style"), std::invalid_argument);
}

TEST_CASE("severity bands") {
    CHECK(severity_band(1, RubricId::Redundancy) == "Low");
    CHECK(severity_band(3, RubricId::Redundancy) == "Low");
    CHECK(severity_band(4, RubricId::Redundancy) == "Medium");
    CHECK(severity_band(7, RubricId::Redundancy) == "High");
    CHECK(severity_band(1, RubricId::Drift) == "faithful");
    CHECK(severity_band(2, RubricId::Drift) == "mild");
    CHECK(severity_band(6, RubricId::Drift) == "omission");
    CHECK(severity_band(8, RubricId::Drift) == "severe");
    CHECK(severity_band(9, RubricId::Drift) == "fabrication");
    CHECK_THROWS_AS(severity_band(0, RubricId::Drift), std::out_of_range);
    CHECK_THROWS_AS(severity_band(11, RubricId::Redundancy), std::out_of_range);
    CHECK_THROWS_AS(severity_band(5, RubricId::Convergence), std::invalid_argument);
    for (const auto& b : drift_finding_bands()) {
        const int s = drift_band_score(b.finding);
        CHECK(s >= b.lo);
        CHECK(s <= b.hi);
    }
    CHECK_THROWS_AS(drift_band_score("typo"), std::invalid_argument);
}

TEST_CASE("jaccard and redundancy proxy") {
    CHECK(token_set("The cat, the HAT!") == std::vector<std::string>{"cat", "hat", "the"});
    CHECK(jaccard("a b", "a b") == 1.0);
    CHECK(jaccard("a b", "c d") == 0.0);
    CHECK(jaccard("a b c", "b c d") == doctest::Approx(0.5));
    CHECK(jaccard("", "") == 0.0);
    CHECK(max_pairwise_jaccard({"a b", "", "a b c"}) == doctest::Approx(2.0 / 3));
    CHECK(standin_redundancy({}, {"x y", "z w"}) == 1);
    CHECK(standin_redundancy({}, {"x y", "x y"}) == 10);
    CHECK(standin_redundancy({}, {"a b c", "b c d"}) == 6);  // 1 + round(4.5)
    CHECK(standin_redundancy({}, {"only one"}) == 1);
    CHECK(standin_redundancy({}, {"a b c", "b c d"}, RedundancyMap{0, 4}) == 2);
    CHECK_THROWS_AS(standin_redundancy({}, {}, RedundancyMap{5, 5}), std::invalid_argument);
}

TEST_CASE("drift stand-in findings") {
    const auto lex = load_drift_lexicon();
    CHECK(lex.contradicts("lossless", "lossy"));
    CHECK_FALSE(lex.contradicts("lossy", "fresh water only"));

    auto v = standin_drift(stellar(), stellar(), lex);
    CHECK(v.findings.empty());
    CHECK(v.score == 1);

    auto claims = stellar();
    claims[1].qualifier = "";
    v = standin_drift(stellar(), claims, lex);
    REQUIRE(v.findings.size() == 1);
    CHECK(v.findings[0].type == "omission");
    CHECK(v.findings[0].metric == "zoom");
    CHECK(v.score == 5);

    claims = stellar();
    claims[1].qualifier = "slightly soft";
    v = standin_drift(stellar(), claims, lex);
    CHECK(v.findings.at(0).type == "exaggeration");

    claims[1].qualifier = "lossless";
    v = standin_drift(stellar(), claims, lex);
    CHECK(v.findings.at(0).type == "fabrication");

    claims = stellar();
    claims[0].value = "IP68";
    claims.push_back(Fact{"wireless_charging", "15 W", ""});
    v = standin_drift(stellar(), claims, lex);
    REQUIRE(v.findings.size() == 2);
    CHECK(v.findings[0].type == "misrepresentation");
    CHECK(v.findings[1].type == "fabrication");
    CHECK(v.score == 10);

    // Adding a qualifier where the source has none is an exaggeration, not a contradiction.
    claims = stellar();
    claims[2].qualifier = "lossless";
    CHECK(standin_drift(stellar(), claims, lex).findings.at(0).type == "exaggeration");
}

TEST_CASE("convergence stand-in") {
    CHECK(standin_convergence(0, 0).score == 10);
    CHECK(standin_convergence(1, 2).score == 5);
    CHECK(standin_convergence(4, 0).score == 0);
    CHECK(standin_convergence(1, 1).findings.size() == 2);
    CHECK_THROWS_AS(standin_convergence(-1, 0), std::invalid_argument);

    StandinBackend b;
    const json bundle{{"positions", json::array()},
                      {"conflicts", json::array({json{{"severity", "hard"}}, json{{"severity", "soft"}, {"resolved", true}},
                                                 json{{"severity", "soft"}}})}};
    CHECK(judge::judge(load_rubric(RubricId::Convergence), bundle, b).score == 6);
}

TEST_CASE("bundle validation") {
    CHECK_THROWS_AS(validate_bundle(RubricId::Redundancy, json{{"task_plan", json::array()}}), std::invalid_argument);
    CHECK_THROWS_AS(validate_bundle(RubricId::Drift, json::array()), std::invalid_argument);
    CHECK_THROWS_AS(validate_bundle(RubricId::Convergence,
                                    json{{"positions", json::array()}, {"conflicts", json::array({json{{"severity", "mild"}}})}}),
                    std::invalid_argument);
    CHECK_NOTHROW(validate_bundle(RubricId::Drift, json{{"source", json::array()}, {"final_ad", json::array()}}));
    StandinBackend b;
    CHECK_THROWS_AS(judge::judge(load_rubric(RubricId::Redundancy), json{{"worker_outputs", json::array()}}, b), std::invalid_argument);
}

TEST_CASE("verdict json round trip") {
    JudgeVerdict v;
    v.score = 8;
    v.findings = {Finding{"misrepresentation", "zoom", "value changed"}};
    const JudgeVerdict back = verdict_from_json(to_json(v));
    CHECK(back.score == 8);
    REQUIRE(back.findings.size() == 1);
    CHECK(back.findings[0].metric == "zoom");
    CHECK(to_json(back) == to_json(v));
}

TEST_CASE("remote judge backend") {
    auto t = std::make_shared<FakeTransport>();
    RemoteBackend b(test_endpoint(), t);
    CHECK_FALSE(b.deterministic());
    const Rubric drift = load_rubric(RubricId::Drift);
    const json bundle{{"source", json::array({to_json(stellar()[0])})}, {"final_ad", json::array()}};

    t->replies.push_back(model_says(json{{"score", 5}, {"findings", json::array({json{{"type", "omission"}, {"metric", "zoom"}}})}}));
    const auto v = judge::judge(drift, bundle, b);
    CHECK(v.score == 5);
    CHECK(v.findings.at(0).type == "omission");
    CHECK(v.raw_exchange.has_value());
    REQUIRE(t->requests.size() == 1);
    const std::string prompt = t->requests[0].at("prompt");
    CHECK(prompt.find("fresh water only") != std::string::npos);

    t->replies.push_back(model_says(json{{"score", 12}}));
    CHECK_THROWS_AS(b.score(drift, bundle), policy::RemoteError);
    t->replies.push_back(model_says(json{{"score", 4}, {"findings", json::array({json{{"type", "typo"}}})}}));
    CHECK_THROWS_AS(b.score(drift, bundle), policy::RemoteError);
    t->replies.push_back(model_says(json{{"verdict", "fine"}}));
    CHECK_THROWS_AS(b.score(drift, bundle), policy::RemoteError);
}

TEST_CASE("backend factory") {
    CHECK(make_backend(json::object())->deterministic());
    CHECK_FALSE(make_backend(json{{"backend", "remote"}, {"endpoint", {{"base_url", "http://judge.test"}}}})->deterministic());
    CHECK_THROWS_AS(make_backend(json{{"backend", "oracle"}}), std::invalid_argument);
    const auto narrow = make_backend(json{{"redundancy_map", {{"lo", 1}, {"hi", 5}}}});
    const json bundle{{"task_plan", json::array()}, {"worker_outputs", json::array({"a b", "a b"})}};
    CHECK(narrow->score(load_rubric(RubricId::Redundancy), bundle).score == 5);
}
