#include "masrisk/kernel/transcript.hpp"

#include <set>
#include <sstream>

namespace masrisk::kernel {

namespace {

json line(const std::string& episode_id, int round, const char* kind, json payload) {
    return json{{"episode_id", episode_id}, {"round", round}, {"kind", kind}, {"payload", std::move(payload)}};
}

json action_payload(const ActionRecord& a) {
    return json{{"agent", to_json(a.agent)}, {"phase", a.phase}, {"action", a.action}, {"audit_refs", a.audit_refs}};
}

json message_payload(const MessageRecord& m) {
    json dropped = json::array();
    for (const auto& d : m.dropped) dropped.push_back(to_json(d));
    return json{{"message", to_json(m.message)}, {"dropped", dropped}};
}

template <typename Fn>
void for_each_line(const EpisodeTranscript& t, Fn&& fn) {
    for (const auto& r : t.rounds) {
        for (std::size_t k = 0; k < r.actions.size(); ++k) {
            const auto& a = r.actions[k];
            fn(line(t.episode_id, r.round, "action", action_payload(a)), r.round, "action", k);
            if (a.message) {
                fn(line(t.episode_id, r.round, "message", message_payload(r.messages.at(*a.message))), r.round, "message", k);
            }
        }
        fn(line(t.episode_id, r.round, "snapshot", r.snapshot), r.round, "snapshot", 0);
    }
    const int last = t.rounds.empty() ? 0 : t.rounds.back().round;
    json terminal{{"outcome", t.outcome}, {"config", t.config}, {"config_digest", t.config_digest}, {"seed", t.seed}};
    fn(line(t.episode_id, last, "terminal", std::move(terminal)), last, "terminal", 0);
}

}  // namespace

std::string to_jsonl(const EpisodeTranscript& t) {
    std::string out;
    for_each_line(t, [&](const json& j, int, const char*, std::size_t) {
        out += j.dump();
        out += '\n';
    });
    return out;
}

std::string audit_to_jsonl(const EpisodeTranscript& t) {
    std::string out;
    for (const auto& a : t.audit) {
        out += a.dump();
        out += '\n';
    }
    return out;
}

TranscriptOffsets transcript_offsets(const EpisodeTranscript& t) {
    TranscriptOffsets off;
    std::size_t n = 0;
    for_each_line(t, [&](const json&, int, const std::string& kind, std::size_t) {
        ++n;
        if (kind == "action") {
            if (off.actions.size() < off.snapshot.size() + 1) off.actions.emplace_back();
            off.actions.back().push_back(n);
        } else if (kind == "snapshot") {
            if (off.actions.size() < off.snapshot.size() + 1) off.actions.emplace_back();
            off.snapshot.push_back(n);
        } else if (kind == "terminal") {
            off.terminal = n;
        }
    });
    return off;
}

EpisodeTranscript parse_jsonl(const std::string& text) {
    EpisodeTranscript t;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    bool terminal_seen = false;
    bool have_id = false;
    RoundRecord current;
    bool open_round = false;
    static const std::set<std::string> expected_fields{"episode_id", "round", "kind", "payload"};

    while (std::getline(in, raw)) {
        ++lineno;
        if (raw.empty()) {
            throw TranscriptParseError(lineno, "empty line");
        }
        if (terminal_seen) {
            throw TranscriptParseError(lineno, "record after terminal");
        }
        json j;
        try {
            j = json::parse(raw);
        } catch (const json::parse_error& e) {
            throw TranscriptParseError(lineno, std::string("malformed JSON: ") + e.what());
        }
        if (!j.is_object() || j.size() != expected_fields.size()) {
            throw TranscriptParseError(lineno, "record must have exactly episode_id, round, kind, payload");
        }
        for (const auto& f : expected_fields) {
            if (!j.contains(f)) throw TranscriptParseError(lineno, "missing field '" + f + "'");
        }
        try {
            const auto id = j.at("episode_id").get<std::string>();
            const int round = j.at("round").get<int>();
            const auto kind = j.at("kind").get<std::string>();
            const json& payload = j.at("payload");
            if (!have_id) {
                t.episode_id = id;
                have_id = true;
            } else if (id != t.episode_id) {
                throw TranscriptParseError(lineno, "episode_id changed mid-file");
            }
            if (kind == "terminal") {
                if (open_round) throw TranscriptParseError(lineno, "terminal inside an unfinished round");
                const int last = t.rounds.empty() ? 0 : t.rounds.back().round;
                if (round != last) throw TranscriptParseError(lineno, "terminal round does not match last round");
                t.outcome = payload.at("outcome");
                t.config = payload.at("config");
                t.config_digest = payload.at("config_digest").get<std::string>();
                t.seed = payload.at("seed").get<std::uint64_t>();
                terminal_seen = true;
                continue;
            }
            const int expected = static_cast<int>(t.rounds.size()) + 1;
            if (round != expected) {
                throw TranscriptParseError(lineno, "round " + std::to_string(round) + " out of order, expected " +
                                                       std::to_string(expected));
            }
            if (!open_round) {
                current = RoundRecord{};
                current.round = round;
                open_round = true;
            }
            if (kind == "action") {
                ActionRecord a;
                a.agent = agent_from_json(payload.at("agent"));
                a.phase = payload.at("phase").get<std::string>();
                a.action = payload.at("action");
                a.audit_refs = payload.at("audit_refs").get<std::vector<std::size_t>>();
                current.actions.push_back(std::move(a));
            } else if (kind == "message") {
                if (current.actions.empty() || current.actions.back().message) {
                    throw TranscriptParseError(lineno, "message without a preceding action");
                }
                MessageRecord m;
                m.message = message_from_json(payload.at("message"));
                for (const auto& d : payload.at("dropped")) m.dropped.push_back(agent_from_json(d));
                current.actions.back().message = current.messages.size();
                current.messages.push_back(std::move(m));
            } else if (kind == "snapshot") {
                current.snapshot = payload;
                t.rounds.push_back(std::move(current));
                open_round = false;
            } else {
                throw TranscriptParseError(lineno, "unknown kind '" + kind + "'");
            }
        } catch (const json::exception& e) {
            throw TranscriptParseError(lineno, std::string("bad record: ") + e.what());
        }
    }
    if (!terminal_seen) {
        throw TranscriptParseError(lineno + 1, "truncated transcript: no terminal record");
    }
    return t;
}

}  // namespace masrisk::kernel
