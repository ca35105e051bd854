#pragma once

#include "masrisk/kernel/environment.hpp"
#include "masrisk/kernel/transcript.hpp"
#include "masrisk/policy/policy.hpp"

#include <cstdint>
#include <string>

namespace masrisk::kernel {

struct EpisodeOptions {
    std::string episode_id = "episode";
    json config = json::object();
    std::uint64_t seed = 0;
    int rounds = 1;
};

// Drives the environment until it terminates or the round cap is hit. A policy
// that produces an invalid action or fails aborts the episode with a
// protocol_violation terminal record.
EpisodeTranscript run_episode(Environment& env, const policy::PolicyMap& policies, const EpisodeOptions& options);

bool is_protocol_violation(const EpisodeTranscript& t);

}  // namespace masrisk::kernel
