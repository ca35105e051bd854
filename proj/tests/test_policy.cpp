#include <doctest.h>

#include "masrisk/env/registry.hpp"
#include "masrisk/policy/belief.hpp"
#include "masrisk/policy/policy.hpp"
#include "masrisk/policy/remote.hpp"
#include "masrisk/policy/schema.hpp"

#include <deque>

using namespace masrisk;
using namespace masrisk::policy;

namespace {

Observation obs_at(int round, const std::string& phase = "act", json state = json::object()) {
    Observation o;
    o.round = round;
    o.phase = phase;
    o.broadcast_state = std::move(state);
    return o;
}

LocalHistory history_before(int round) {
    LocalHistory h;
    for (int r = 1; r < round; ++r) h.push_back(RoundMemory{r, {}, {}});
    return h;
}

json act(const Policy& p, const Observation& o, std::uint64_t seed = 1, std::vector<RemoteExchange>* audit = nullptr) {
    Rng rng(seed);
    ActContext ctx{rng, audit, "Seller1"};
    return p.act(o, history_before(o.round), ctx);
}

// Replays canned replies and records what was sent.
class FakeTransport : public HttpTransport {
public:
    std::deque<HttpReply> replies;
    std::vector<json> requests;
    std::vector<std::map<std::string, std::string>> headers;
    HttpReply post(const std::string&, const std::string&, const std::string& body, const std::map<std::string, std::string>& h,
                   int) override {
        requests.push_back(json::parse(body));
        headers.push_back(h);
        if (replies.empty()) throw RemoteError(RemoteErrorCode::Timeout, "no reply");
        auto r = replies.front();
        replies.pop_front();
        return r;
    }
};

HttpReply text_reply(const std::string& text) { return HttpReply{200, json{{"text", text}}.dump()}; }

json remote_spec(int retries = 1) {
    return json{{"kind", "remote"},
                {"template", "bertrand_seller"},
                {"schema", "price"},
                {"endpoint", {{"base_url", "http://model.test"}, {"credential", "tok"}, {"retry_limit", retries}, {"backoff_initial_ms", 0}}}};
}

const json kSellerState{{"cost", 10}, {"last_prices", json::object()}, {"my_cumulative_profit", 0}};

}  // namespace

TEST_CASE("scripted policy picks the most specific entry") {
    const Observation o = obs_at(2, "report", json{{"x", 1}});
    const std::string digest = observation_digest(o);
    ScriptedPolicy p({{0, "*", "", json{{"a", "default"}}},
                      {0, "*", "report", json{{"a", "phase"}}},
                      {2, "*", "", json{{"a", "round"}}},
                      {0, digest, "", json{{"a", "digest"}}},
                      {2, digest, "report", json{{"a", "all"}}}});
    CHECK(act(p, o) == json{{"a", "all"}});
    CHECK(act(p, obs_at(3, "report")) == json{{"a", "phase"}});
    CHECK(act(p, obs_at(3, "decide")) == json{{"a", "default"}});
    CHECK(act(p, obs_at(2, "decide")) == json{{"a", "round"}});
}

TEST_CASE("observation digest ignores the inbox") {
    Observation a = obs_at(1, "act", json{{"k", 1}});
    Observation b = a;
    b.inbox.push_back(json{{"m", "hello"}});
    CHECK(observation_digest(a) == observation_digest(b));
    b.broadcast_state["k"] = 2;
    CHECK(observation_digest(a) != observation_digest(b));
}

TEST_CASE("scripted totality and missing entries") {
    const auto seq = ScriptedPolicy::sequence({json{{"v", 1}}, json{{"v", 2}}});
    CHECK(seq.is_total(2));
    CHECK_FALSE(seq.is_total(3));
    CHECK(ScriptedPolicy::constant(json{{"v", 0}}).is_total(50, {"a", "b"}));
    CHECK_FALSE(ScriptedPolicy({{0, "*", "a", json{}}}).is_total(1, {"a", "b"}));
    try {
        act(seq, obs_at(3));
        FAIL("expected a policy error");
    } catch (const PolicyError& e) {
        CHECK(e.cause() == "script");
    }
}

TEST_CASE("policies reject a history that does not match the clock") {
    const auto p = ScriptedPolicy::constant(json{{"v", 0}});
    Rng rng(1);
    ActContext ctx{rng, nullptr, "A"};
    CHECK_THROWS(p.act(obs_at(3), history_before(2), ctx));
}

TEST_CASE("make_policy builds every local kind") {
    const auto& reg = env::strategy_registry();
    CHECK(make_policy(json{{"kind", "constant"}, {"action", {{"price", 15}}}}, reg)->kind() == "scripted");
    const auto seq = make_policy(json{{"kind", "sequence"}, {"actions", {{{"v", 1}}, {{"v", 2}}}}}, reg);
    CHECK(act(*seq, obs_at(2)) == json{{"v", 2}});
    const auto table = make_policy(json{{"kind", "scripted"}, {"table", {{{"round", 1}, {"action", {{"v", "first"}}}}, {{"action", {{"v", "rest"}}}}}}}, reg);
    CHECK(act(*table, obs_at(1)) == json{{"v", "first"}});
    CHECK(act(*table, obs_at(4)) == json{{"v", "rest"}});
    const auto cyc = make_policy(json{{"kind", "strategy"}, {"name", "cycle"}, {"params", {{"actions", {1, 2, 3}}}}}, reg);
    CHECK(act(*cyc, obs_at(5)) == 2);
    CHECK_THROWS(make_policy(json{{"kind", "strategy"}, {"name", "no_such_strategy"}}, reg));
    CHECK_THROWS(make_policy(json{{"kind", "oracle"}}, reg));
}

TEST_CASE("random choice is a function of the stream seed") {
    const auto p = make_policy(json{{"kind", "strategy"}, {"name", "random_choice"}, {"params", {{"choices", {"a", "b", "c", "d"}}}}},
                               env::strategy_registry());
    for (std::uint64_t s = 0; s < 20; ++s) CHECK(act(*p, obs_at(1), s) == act(*p, obs_at(1), s));
    std::set<std::string> seen;
    for (std::uint64_t s = 0; s < 50; ++s) seen.insert(act(*p, obs_at(1), s).get<std::string>());
    CHECK(seen.size() == 4);
}

TEST_CASE("template rendering") {
    const json ctx{{"round", 3}, {"broadcast_state", {{"cost", 10}, {"list", {4, 5}}}}};
    CHECK(render_template("r={{round}} c={{ broadcast_state.cost }} l={{broadcast_state.list.1}}", ctx) == "r=3 c=10 l=5");
    CHECK(render_template("{{broadcast_state}}", ctx) == ctx.at("broadcast_state").dump());
    CHECK_THROWS_AS(render_template("{{missing}}", ctx), RemoteError);
    CHECK_THROWS_AS(render_template("{{ bad-name }}", ctx), RemoteError);
}

TEST_CASE("model text parsing tolerates prose and bare keys") {
    CHECK(parse_model_text(R"({"price": 12})") == json{{"price", 12}});
    CHECK(parse_model_text("Sure! Here it is: {\"price\": 12.5} hope that helps") == json{{"price", 12.5}});
    CHECK(parse_model_text("{price: 14, say: \"hi\"}") == json{{"price", 14}, {"say", "hi"}});
    CHECK_FALSE(parse_model_text("no json here").has_value());
    CHECK_FALSE(parse_model_text("   ").has_value());
}

TEST_CASE("schema subset validation") {
    const json s = load_schema("price");
    CHECK_FALSE(schema_violation(s, json{{"price", 3}}).has_value());
    CHECK(schema_violation(s, json{{"price", -1}}).has_value());
    CHECK(schema_violation(s, json{{"say", "x"}}).has_value());
    CHECK(schema_violation(s, json{{"price", "cheap"}}).has_value());
    const json e{{"type", "object"}, {"properties", {{"a", {{"enum", {"x", "y"}}}}}}, {"additionalProperties", false}};
    CHECK_FALSE(schema_violation(e, json{{"a", "x"}}).has_value());
    CHECK(schema_violation(e, json{{"a", "z"}}).has_value());
    CHECK(schema_violation(e, json{{"b", 1}}).has_value());
}

TEST_CASE("remote policy sends the rendered prompt and validates the reply") {
    auto t = std::make_shared<FakeTransport>();
    t->replies.push_back(text_reply("{\"price\": 13}"));
    const auto p = make_policy(remote_spec(), env::strategy_registry(), t);
    std::vector<RemoteExchange> audit;
    CHECK(act(*p, obs_at(2, "price", kSellerState), 1, &audit) == json{{"price", 13}});
    REQUIRE(t->requests.size() == 1);
    const std::string prompt = t->requests[0].at("prompt");
    CHECK(prompt.find("unit cost is 10") != std::string::npos);
    CHECK(prompt.find("Round 2") != std::string::npos);
    CHECK(t->requests[0].at("temperature") == 0.0);
    CHECK(t->headers[0].at("Authorization") == "Bearer tok");
    REQUIRE(audit.size() == 1);
    CHECK(audit[0].status == 200);
    CHECK(audit[0].agent == "Seller1");
}

TEST_CASE("remote policy retries, then reports the failure code") {
    auto t = std::make_shared<FakeTransport>();
    t->replies.push_back(HttpReply{503, "busy"});
    t->replies.push_back(text_reply("{\"price\": 9}"));
    const auto p = make_policy(remote_spec(1), env::strategy_registry(), t);
    std::vector<RemoteExchange> audit;
    CHECK(act(*p, obs_at(1, "price", kSellerState), 1, &audit) == json{{"price", 9}});
    CHECK(audit.size() == 2);
    CHECK(audit[0].attempt == 0);
    CHECK(audit[1].attempt == 1);

    auto bad = std::make_shared<FakeTransport>();
    bad->replies.push_back(text_reply("{\"cost\": 1}"));
    bad->replies.push_back(text_reply("I would rather not"));
    const auto q = make_policy(remote_spec(1), env::strategy_registry(), bad);
    try {
        act(*q, obs_at(1, "price", kSellerState));
        FAIL("expected failure");
    } catch (const PolicyError& e) {
        CHECK(e.cause() == "remote:schema_mismatch");
    }

    auto down = std::make_shared<FakeTransport>();
    const auto r = make_policy(remote_spec(0), env::strategy_registry(), down);
    try {
        act(*r, obs_at(1, "price", kSellerState));
        FAIL("expected failure");
    } catch (const PolicyError& e) {
        CHECK(e.cause() == "remote:timeout");
    }
    CHECK(down->requests.size() == 1);
}

TEST_CASE("remote policy without an endpoint fails as a transport error") {
    auto t = std::make_shared<FakeTransport>();
    json spec = remote_spec(0);
    spec["endpoint"]["base_url"] = "";
    const auto p = make_policy(spec, env::strategy_registry(), t);
    try {
        act(*p, obs_at(1, "price", kSellerState));
        FAIL("expected failure");
    } catch (const PolicyError& e) {
        CHECK(e.cause() == "remote:transport");
    }
    CHECK(t->requests.empty());
}

TEST_CASE("bayes update on a two-state example") {
    Belief prior{{"good", "bad"}, {0.5, 0.5}};
    const TransitionModel tm{{"*", {{1, 0}, {0, 1}}}};
    const ObservationModel om{{"hi", "lo"}, {{0.8, 0.2}, {0.3, 0.7}}};
    const auto post = bayes_update(prior, tm, om, "wait", "hi");
    CHECK(post.mass[0] == doctest::Approx(0.8 / 1.1));
    CHECK(post.mass[1] == doctest::Approx(0.3 / 1.1));
    CHECK_THROWS(bayes_update(prior, tm, om, "wait", "unknown"));
    CHECK_THROWS(validate_belief(Belief{{"a", "b"}, {0.5, 0.6}}));
    CHECK_THROWS(validate_belief(Belief{{"a"}, {0.5, 0.5}}));
    // An observation impossible under every state has no posterior.
    const ObservationModel never{{"x"}, {{0}, {0}}};
    CHECK_THROWS(bayes_update(prior, tm, never, "wait", "x"));
}
