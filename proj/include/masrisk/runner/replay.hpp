#pragma once

#include "masrisk/kernel/transcript.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace masrisk::runner {

struct ReplayResult {
    bool match = false;
    std::optional<int> divergent_round;
    std::optional<std::size_t> parse_error_line;
    std::string detail;
};

// Rebuilds the environment from the terminal record's config and seed, re-applies the
// recorded actions and compares every snapshot and the terminal outcome.
ReplayResult replay_transcript(const kernel::EpisodeTranscript& t);
ReplayResult replay_text(const std::string& jsonl);
ReplayResult replay_file(const std::filesystem::path& path);

}  // namespace masrisk::runner
