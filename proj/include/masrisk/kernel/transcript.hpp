#pragma once

#include "masrisk/core/json.hpp"
#include "masrisk/kernel/types.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace masrisk::kernel {

struct ActionRecord {
    AgentId agent;
    std::string phase;
    json action;
    std::optional<std::size_t> message;  // index into RoundRecord::messages
    std::vector<std::size_t> audit_refs; // indices into EpisodeTranscript::audit
};

struct MessageRecord {
    Message message;
    std::vector<AgentId> dropped;
};

struct RoundRecord {
    int round = 0;
    std::vector<ActionRecord> actions;
    std::vector<MessageRecord> messages;
    json snapshot;
};

struct EpisodeTranscript {
    std::string episode_id;
    std::string config_digest;
    std::uint64_t seed = 0;
    json config;
    std::vector<RoundRecord> rounds;
    json outcome;
    std::vector<json> audit;
};

class TranscriptParseError : public std::runtime_error {
public:
    TranscriptParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

std::string to_jsonl(const EpisodeTranscript& t);
std::string audit_to_jsonl(const EpisodeTranscript& t);
EpisodeTranscript parse_jsonl(const std::string& text);

// 1-based JSONL line numbers of the records, matching to_jsonl().
struct TranscriptOffsets {
    std::vector<std::size_t> snapshot;                  // per round, in order
    std::vector<std::vector<std::size_t>> actions;      // per round, per action
    std::size_t terminal = 0;
};

TranscriptOffsets transcript_offsets(const EpisodeTranscript& t);

}  // namespace masrisk::kernel
