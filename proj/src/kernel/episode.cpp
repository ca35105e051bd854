#include "masrisk/kernel/episode.hpp"

#include "masrisk/core/digest.hpp"
#include "masrisk/policy/remote.hpp"

#include <stdexcept>

namespace masrisk::kernel {

std::vector<std::size_t> Environment::message_targets(const Turn& turn, int round, const json& action) const {
    (void)action;
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < roster().size(); ++j) {
        if (topology().allowed(turn.agent, j, round)) out.push_back(j);
    }
    return out;
}

namespace {

struct Delivered {
    Message message;
    bool consumed = false;
};

json violation_record(int round, const AgentId& agent, const std::string& phase, const std::string& cause,
                      const std::string& detail, const json& action) {
    return json{{"reason", "protocol_violation"}, {"round", round}, {"agent", agent.label}, {"phase", phase},
                {"cause", cause}, {"detail", detail}, {"action", action}};
}

}  // namespace

EpisodeTranscript run_episode(Environment& env, const policy::PolicyMap& policies, const EpisodeOptions& options) {
    if (options.rounds < 1) {
        throw ConfigError("rounds must be >= 1");
    }
    const Roster& roster = env.roster();
    for (std::size_t i = 0; i < roster.size(); ++i) {
        if (env.needs_policy(i) && policies.count(roster[i].id.label) == 0) {
            throw ConfigError("no policy bound for agent '" + roster[i].id.label + "'");
        }
    }

    EpisodeTranscript t;
    t.episode_id = options.episode_id;
    t.config = options.config;
    t.config_digest = config_digest(options.config);
    t.seed = options.seed;

    std::vector<std::vector<Delivered>> mailboxes(roster.size());
    std::vector<policy::LocalHistory> histories(roster.size());

    for (int round = 1; round <= options.rounds; ++round) {
        RoundRecord record;
        record.round = round;
        std::vector<TurnRecord> turns;
        std::vector<policy::RoundMemory> memory(roster.size());
        for (auto& m : memory) m.round = round;

        while (auto turn = env.next_turn(round, turns)) {
            const AgentId& who = roster.at(turn->agent).id;
            policy::Observation obs;
            obs.round = round;
            obs.phase = turn->phase;
            obs.broadcast_state = env.observe(*turn, round, turns);
            for (auto& d : mailboxes[turn->agent]) {
                if (d.consumed || (turn->simultaneous && d.message.round >= round)) continue;
                obs.inbox.push_back(d.message.payload);
                d.consumed = true;
            }

            const auto& policy = policies.at(who.label);
            // A second turn by the same agent in one round gets a derived stream.
            std::uint64_t stream = stream_seed(options.seed, who.index, round);
            for (std::size_t k = 0; k < memory[turn->agent].actions.size(); ++k) stream = splitmix64(stream);
            Rng rng(stream);
            const std::size_t audit_before = t.audit.size();
            std::vector<policy::RemoteExchange> exchanges;
            policy::ActContext ctx{rng, &exchanges, who.label};
            json action;
            try {
                action = policy->act(obs, histories[turn->agent], ctx);
                for (auto& ex : exchanges) t.audit.push_back(policy::to_json(ex));
                env.check_action(*turn, round, action, turns);
            } catch (const ActionSpaceError& e) {
                t.outcome = violation_record(round, who, turn->phase, "action_space", e.what(), action);
                return t;
            } catch (const policy::PolicyError& e) {
                for (auto& ex : exchanges) t.audit.push_back(policy::to_json(ex));
                t.outcome = violation_record(round, who, turn->phase, e.cause(), e.what(), action);
                return t;
            }

            ActionRecord ar;
            ar.agent = who;
            ar.phase = turn->phase;
            ar.action = action;
            for (std::size_t k = audit_before; k < t.audit.size(); ++k) ar.audit_refs.push_back(k);

            const auto targets = env.message_targets(*turn, round, action);
            if (!targets.empty()) {
                Message msg;
                msg.round = round;
                msg.sender = who;
                for (auto j : targets) msg.receivers.push_back(roster.at(j).id);
                msg.payload = json{{"from", who.label}, {"phase", turn->phase}, {"action", action}};
                DeliveryResult res = deliver(env.topology(), msg);
                for (const auto& r : res.delivered.receivers) {
                    mailboxes[r.index].push_back(Delivered{res.delivered, false});
                }
                ar.message = record.messages.size();
                record.messages.push_back(MessageRecord{res.delivered, res.dropped});
            }
            record.actions.push_back(std::move(ar));
            memory[turn->agent].observations.push_back(std::move(obs));
            memory[turn->agent].actions.push_back(action);
            turns.push_back(TurnRecord{*turn, std::move(action)});
        }

        std::optional<json> terminal;
        try {
            terminal = env.apply(round, turns);
        } catch (const ActionSpaceError& e) {
            const auto& last = turns.empty() ? roster.front().id : roster.at(turns.back().turn.agent).id;
            t.outcome = violation_record(round, last, turns.empty() ? "" : turns.back().turn.phase, "action_space",
                                         e.what(), turns.empty() ? json() : turns.back().action);
            return t;
        } catch (const policy::RemoteError& e) {
            // A remote judge scoring the round failed.
            t.outcome = violation_record(round, roster.front().id, "", "remote:" + policy::to_string(e.code()), e.what(), json());
            return t;
        }
        record.snapshot = env.snapshot();
        t.rounds.push_back(std::move(record));
        for (std::size_t i = 0; i < roster.size(); ++i) histories[i].push_back(std::move(memory[i]));
        if (terminal) {
            t.outcome = *terminal;
            return t;
        }
    }
    t.outcome = env.outcome();
    return t;
}

bool is_protocol_violation(const EpisodeTranscript& t) {
    return t.outcome.is_object() && t.outcome.value("reason", "") == "protocol_violation";
}

}  // namespace masrisk::kernel
