#pragma once

#include "masrisk/core/json.hpp"
#include "masrisk/metrics/report.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace masrisk::runner {

enum ExitCode { kExitOk = 0, kExitValidation = 1, kExitProtocolViolation = 2, kExitRemote = 3 };

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ConditionConfig {
    std::string name;
    json env = json::object();
    json policies = json::object();  // agent label -> policy spec; "*" binds every unlisted agent
    std::vector<std::uint64_t> seeds;  // one per replication
    int round_cap = 1000;
};

struct SuiteConfig {
    std::string risk;
    std::vector<ConditionConfig> conditions;
    int replications = 1;
    std::uint64_t seed_base = 0;
    std::string output_dir = "out";
    json judge = json::object();
};

// Schema check, then semantic checks: known risk, env params, fixtures, policy bindings,
// seed uniqueness. Throws ValidationError.
SuiteConfig parse_suite_config(const json& j);
SuiteConfig load_suite_config(const std::filesystem::path& path);

// Default seeds are seed_base + condition_index * replications + replication.
std::uint64_t default_seed(std::uint64_t seed_base, std::size_t condition, int replications, int replication);

std::string episode_name(std::size_t replication);

struct ConditionResult {
    std::string condition;
    metrics::RiskReport report;
    std::vector<std::string> transcripts;  // paths relative to the risk directory
    int protocol_violations = 0;
    int remote_failures = 0;
};

struct SummaryTable {
    std::string risk;
    std::vector<ConditionResult> conditions;
};

json to_json(const SummaryTable& s);
std::string summary_csv(const SummaryTable& s);

int exit_code(const SummaryTable& s);

// One episode of `condition` with the runner's policy binding and recorded config.
// A null backend is built from config.judge.
kernel::EpisodeTranscript run_episode(const SuiteConfig& config, const ConditionConfig& condition, std::uint64_t seed,
                                      const std::string& episode_id, std::shared_ptr<const judge::Backend> backend = nullptr);

// Runs every (condition, replication) episode on `jobs` workers, writes
// <output_dir>/<risk>/<condition>/<episode>.jsonl, per-condition report.json and report.csv,
// and <output_dir>/<risk>/summary.json and summary.csv. `write` = false keeps everything in memory.
SummaryTable run_suite(const SuiteConfig& config, int jobs = 1, bool write = true);

// Rebuilds reports and the summary from transcripts already on disk under <out_dir>/<risk>.
SummaryTable rebuild_reports(const std::filesystem::path& out_dir, const std::string& risk, bool write = true);

}  // namespace masrisk::runner
