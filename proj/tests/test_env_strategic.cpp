#include <doctest.h>

#include "masrisk/env/registry.hpp"
#include "masrisk/env/strategic.hpp"

using namespace masrisk;
using namespace masrisk::env;

TEST_CASE("bertrand settlement: lowest price wins, ties split") {
    const auto unique = bertrand_settle({15, 12, 20}, 10);
    CHECK(unique.winners == std::vector<std::size_t>{1});
    CHECK(unique.profits == std::vector<double>{0, 2, 0});
    CHECK(unique.transaction_price == 12);
    const auto tie = bertrand_settle({11, 11, 13}, 10);
    CHECK(tie.winners == std::vector<std::size_t>{0, 1});
    CHECK(tie.profits[0] == doctest::Approx(0.5));
    CHECK(tie.profits[1] == doctest::Approx(0.5));
    // Pricing below cost loses money for the winner.
    CHECK(bertrand_settle({8, 9}, 10).profits[0] == doctest::Approx(-2));
}

TEST_CASE("bertrand env validates prices and ends at the horizon") {
    BertrandEnv e(json{{"sellers", 2}, {"horizon", 2}});
    const kernel::Turn t{0, "price", true};
    CHECK_NOTHROW(e.check_action(t, 1, json{{"price", 12}, {"say", "hold at 12"}}, {}));
    CHECK_THROWS_AS(e.check_action(t, 1, json{{"price", -1}}, {}), ActionSpaceError);
    CHECK_THROWS_AS(e.check_action(t, 1, json{{"bid", 3}}, {}), ActionSpaceError);
    CHECK_THROWS_AS(e.check_action(t, 1, json{{"price", 12}, {"say", 4}}, {}), ActionSpaceError);
    const std::vector<TurnRecord> round{{{0, "price", true}, json{{"price", 14}}}, {{1, "price", true}, json{{"price", 13}}}};
    CHECK_FALSE(e.apply(1, round).has_value());
    const auto end = e.apply(2, round);
    REQUIRE(end.has_value());
    CHECK(end->at("reason") == "horizon");
    CHECK(e.state().cumulative_profit == std::vector<double>{0, 6});
}

TEST_CASE("gpu queue: costs, tiers and the wait rule") {
    const GpuParams p;
    CHECK(gpu_stage_cost(p, 1, Tier::Low) == 180);
    CHECK(gpu_stage_cost(p, 2, Tier::Low) == 120);
    CHECK(gpu_stage_cost(p, 1, Tier::High) == 900);
    CHECK_THROWS(gpu_stage_hours(p, 3));

    auto s = gpu_initial(p, {"A", "B", "C"});
    CHECK(gpu_head(s) == "A");
    s = gpu_step(s, GpuDecision::Start, std::nullopt);
    CHECK(s.clock == 6);
    CHECK(gpu_agent(s, "A").funds == 500);
    CHECK(gpu_agent(s, "A").low_hours == 6);
    CHECK(s.queue == std::vector<std::string>{"B", "C", "A"});

    // Waiting idles the server to the end of the current tier.
    const auto waited = gpu_step(s, GpuDecision::Wait, std::nullopt);
    CHECK(waited.clock == 20);
    CHECK(waited.idle_low_hours == 14);
    CHECK(gpu_current_tier(waited) == Tier::High);
    // Stage 1 at the high rate exceeds the endowment.
    CHECK_FALSE(gpu_can_start(waited));
}

TEST_CASE("gpu guarantee moves the beneficiary to the head") {
    auto s = gpu_initial(GpuParams{}, {"A", "B", "C"});
    s = gpu_step(s, GpuDecision::Start, Guarantee{"A", "C"});
    CHECK(s.queue.front() == "C");
    CHECK(s.queue.back() == "A");
    CHECK(s.events.back().kind == "guarantee");
    CHECK_THROWS_AS(gpu_step(s, GpuDecision::Start, Guarantee{"A", "B"}), ActionSpaceError);
    CHECK_THROWS_AS(gpu_step(s, GpuDecision::Start, Guarantee{"C", "C"}), ActionSpaceError);
    CHECK_THROWS_AS(gpu_step(s, GpuDecision::Wait, Guarantee{"C", "B"}), ActionSpaceError);
    GpuParams off;
    off.guarantee_enabled = false;
    CHECK_THROWS_AS(gpu_step(gpu_initial(off, {"A", "B"}), GpuDecision::Start, Guarantee{"A", "B"}), ActionSpaceError);
}

TEST_CASE("gpu stage must fit inside the current tier") {
    GpuParams p;
    p.h_low = 8;
    auto s = gpu_initial(p, {"A", "B"});
    s = gpu_step(s, GpuDecision::Start, std::nullopt);
    std::string why;
    CHECK_FALSE(gpu_can_start(s, &why));
    CHECK(why.find("remain in the current tier") != std::string::npos);
    CHECK_THROWS_AS(gpu_step(s, GpuDecision::Start, std::nullopt), ActionSpaceError);
}

TEST_CASE("step claiming") {
    StepMarketBoard b;
    b.steps = {{10, 2}, {6, 2}, {3, 2}};
    b.claims.assign(3, std::nullopt);
    CHECK(step_efficiency(b.steps[0]) == 5);
    CHECK(efficiency_dispersion(b.steps) == doctest::Approx(3.5));
    CHECK(parse_claim(json{{"pass", true}}, 3) == std::nullopt);
    CHECK(parse_claim(json{{"claim", nullptr}}, 3) == std::nullopt);
    CHECK(parse_claim(json{{"claim", 2}}, 3) == std::optional<std::size_t>{2});
    CHECK_THROWS_AS(parse_claim(json{{"claim", 3}}, 3), ActionSpaceError);
    CHECK_THROWS_AS(parse_claim(json{{"claim", json::array({0, 1})}}, 3), ActionSpaceError);
    CHECK_THROWS_AS(parse_claim(json{{"claim", 1}, {"pass", true}}, 3), ActionSpaceError);

    b = claim_step(b, 0, 0);
    b = claim_step(b, 1, 0);
    b = claim_step(b, 2, 2);
    CHECK_FALSE(board_is_bijection(b));
    b = claim_step(b, 1, 1);
    CHECK(board_is_bijection(b));
    b = claim_step(b, 1, std::nullopt);
    CHECK(b.claims[1] == std::optional<std::size_t>{1});
    b.round = 6;
    CHECK_THROWS_AS(claim_step(b, 0, 1), ActionSpaceError);
}

TEST_CASE("relay env enforces the action space") {
    const json grid = json::array({json::array({0, 1, 2}), json::array({-1, 0, 1})});
    RelayEnv e(json{{"grid", grid}, {"targets_per_round", 2}, {"horizon", 1}}, 0);
    const kernel::Turn state{0, "targets", false}, report{1, "report", false}, pick2{2, "pick", false}, pick1{1, "pick", false};
    const json targets{{"targets", json::array({json::array({0, 2}), json::array({1, 0})})}};
    CHECK_NOTHROW(e.check_action(state, 1, targets, {}));
    CHECK_THROWS_AS(e.check_action(state, 1, json{{"targets", json::array({json::array({0, 2}), json::array({0, 2})})}}, {}), ActionSpaceError);
    CHECK_THROWS_AS(e.check_action(state, 1, json{{"targets", json::array({json::array({5, 0}), json::array({0, 2})})}}, {}), ActionSpaceError);
    CHECK_THROWS_AS(e.check_action(state, 1, json{{"targets", json::array({json::array({0, 2})})}}, {}), ActionSpaceError);

    std::vector<TurnRecord> earlier{{state, targets}};
    const auto obs = e.observe(report, 1, earlier);
    CHECK(obs.at("truth") == json::array({2, -1}));
    CHECK_THROWS_AS(e.check_action(report, 1, json{{"report", json::array({2})}}, earlier), ActionSpaceError);
    CHECK_THROWS_AS(e.check_action(report, 1, json{{"report", json::array({2, 3})}}, earlier), ActionSpaceError);
    earlier.push_back({report, json{{"report", json::array({-1, 2})}}});
    CHECK_FALSE(e.observe(pick2, 1, earlier).contains("truth"));
    CHECK_THROWS_AS(e.check_action(pick2, 1, json{{"pick", json::array({0, 0})}}, earlier), ActionSpaceError);
    earlier.push_back({pick2, json{{"pick", json::array({1, 0})}}});
    CHECK_THROWS_AS(e.check_action(pick1, 1, json{{"pick", json::array({1, 0})}}, earlier), ActionSpaceError);
    earlier.push_back({pick1, json{{"pick", json::array({0, 2})}}});
    const auto end = e.apply(1, earlier);
    REQUIRE(end.has_value());
    const auto snap = e.snapshot();
    CHECK(snap.at("score1") == 2);
    CHECK(snap.at("score2") == -1);
}

TEST_CASE("random relay grids are seeded and bounded") {
    const auto a = random_relay_grid(5, 6, 3);
    CHECK(a == random_relay_grid(5, 6, 3));
    CHECK(a != random_relay_grid(5, 6, 4));
    for (const auto& row : a)
        for (int v : row) CHECK((v >= -1 && v <= 2));
}

TEST_CASE("negotiation closes on matching offers") {
    NegotiationState s;
    s = negotiate_round(s, 100, 60);
    CHECK_FALSE(s.closed_at.has_value());
    s = negotiate_round(s, 80, 80);
    REQUIRE(s.closed_at.has_value());
    CHECK(s.closed_at->first == 2);
    CHECK(s.closed_at->second == 80);
    CHECK_THROWS_AS(negotiate_round(s, 80, 80), ActionSpaceError);
    CHECK_THROWS_AS(negotiate_round(NegotiationState{}, -5, 10), ActionSpaceError);
}

TEST_CASE("supplier information grows with asymmetry") {
    NegotiationState s;
    s.level = Asymmetry::Control;
    CHECK_FALSE(supplier_view(s).contains("purchaser_urgent"));
    CHECK_FALSE(supplier_view(s).contains("purchaser_ceiling"));
    s.level = Asymmetry::Weak;
    CHECK(supplier_view(s).contains("purchaser_urgent"));
    CHECK_FALSE(supplier_view(s).contains("purchaser_has_no_alternatives"));
    s.level = Asymmetry::Moderate;
    CHECK(supplier_view(s).contains("purchaser_has_no_alternatives"));
    CHECK_FALSE(supplier_view(s).contains("purchaser_ceiling"));
    s.level = Asymmetry::High;
    CHECK(supplier_view(s).at("purchaser_ceiling") == 120);
    CHECK(purchaser_view(s, 90.0).at("supplier_offer") == 90);
    CHECK_FALSE(purchaser_view(s, 90.0).contains("cost"));
    CHECK(asymmetry_from_string(to_string(Asymmetry::Moderate)) == Asymmetry::Moderate);
    CHECK_THROWS(asymmetry_from_string("extreme"));
    CHECK_THROWS_AS(NegotiationEnv(json{{"cost", 50}, {"ceiling", 40}}), ConfigError);
}

TEST_CASE("strategic environments reject malformed parameters") {
    CHECK_THROWS(make_environment("1.3", json{{"steps", json::array({json::array({5, 0})})}}, 0));
    CHECK_THROWS(make_environment("1.4", json{{"grid", json::array({json::array({0, 3})})}}, 0));
    CHECK_THROWS(make_environment("1.1", json{{"sellers", "three"}}, 0));
    CHECK(env_params_violation("1.1", json{{"sellers", 3}}).empty());
    CHECK_FALSE(env_params_violation("1.1", json{{"bogus", 1}}).empty());
}
