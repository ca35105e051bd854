#include "masrisk/runner/replay.hpp"

#include "masrisk/core/data_dir.hpp"
#include "masrisk/core/digest.hpp"
#include "masrisk/env/registry.hpp"
#include "masrisk/judge/judge.hpp"
#include "masrisk/kernel/episode.hpp"
#include "masrisk/kernel/types.hpp"

namespace masrisk::runner {

namespace {

ReplayResult diverged(int round, const std::string& detail) {
    ReplayResult r;
    r.divergent_round = round;
    r.detail = detail;
    return r;
}

}  // namespace

ReplayResult replay_transcript(const kernel::EpisodeTranscript& t) {
    if (config_digest(t.config) != t.config_digest) {
        ReplayResult r;
        r.detail = "config digest does not match the recorded config";
        return r;
    }
    const std::string risk = t.config.at("risk").get<std::string>();
    auto env = env::make_environment(risk, t.config.value("env", json::object()), t.seed,
                                     judge::make_backend(t.config.value("judge", json::object())));

    std::optional<json> terminal;
    for (const auto& rec : t.rounds) {
        if (terminal) return diverged(rec.round, "environment terminated before this round");
        std::vector<kernel::TurnRecord> turns;
        for (const auto& a : rec.actions) {
            const auto turn = env->next_turn(rec.round, turns);
            if (!turn) return diverged(rec.round, "recorded action by " + a.agent.label + " has no matching turn");
            if (turn->agent != a.agent.index || turn->phase != a.phase) {
                return diverged(rec.round, "turn order differs at " + a.agent.label + " phase '" + a.phase + "'");
            }
            try {
                env->check_action(*turn, rec.round, a.action, turns);
            } catch (const kernel::ActionSpaceError& e) {
                return diverged(rec.round, std::string("recorded action rejected: ") + e.what());
            }
            turns.push_back(kernel::TurnRecord{*turn, a.action});
        }
        if (env->next_turn(rec.round, turns)) return diverged(rec.round, "round has turns missing from the transcript");
        try {
            terminal = env->apply(rec.round, turns);
        } catch (const kernel::ActionSpaceError& e) {
            return diverged(rec.round, std::string("apply rejected the round: ") + e.what());
        }
        if (canonical_dump(env->snapshot()) != canonical_dump(rec.snapshot)) {
            return diverged(rec.round, "snapshot differs");
        }
    }

    ReplayResult r;
    if (!kernel::is_protocol_violation(t)) {
        const json expected = terminal ? *terminal : env->outcome();
        if (canonical_dump(expected) != canonical_dump(t.outcome)) {
            const int last = t.rounds.empty() ? 0 : t.rounds.back().round;
            return diverged(last, "terminal outcome differs");
        }
    }
    r.match = true;
    return r;
}

ReplayResult replay_text(const std::string& jsonl) {
    kernel::EpisodeTranscript t;
    try {
        t = kernel::parse_jsonl(jsonl);
    } catch (const kernel::TranscriptParseError& e) {
        ReplayResult r;
        r.parse_error_line = e.line();
        r.detail = e.what();
        return r;
    }
    return replay_transcript(t);
}

ReplayResult replay_file(const std::filesystem::path& path) { return replay_text(read_text_file(path)); }

}  // namespace masrisk::runner
