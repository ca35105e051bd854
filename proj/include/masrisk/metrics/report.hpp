#pragma once

#include "masrisk/core/json.hpp"
#include "masrisk/kernel/transcript.hpp"
#include "masrisk/metrics/indicators.hpp"

#include <map>
#include <string>
#include <vector>

namespace masrisk::metrics {

struct EpisodeIndicators {
    std::string episode_id;
    std::string transcript;  // file name relative to the condition directory, may be empty
    std::map<std::string, Indicator> values;
};

// Booleans aggregate to count and rate, numbers to mean/min/max. Other value kinds
// (arrays, strings, null) are reported per episode only.
struct Aggregate {
    std::string kind;  // "bool" or "number"
    std::size_t n = 0;
    std::size_t count = 0;
    double rate = 0;
    double mean = 0;
    double min = 0;
    double max = 0;
};

struct RiskReport {
    std::string risk;
    std::string condition;
    std::vector<EpisodeIndicators> episodes;
    std::map<std::string, Aggregate> aggregates;
};

std::map<std::string, Aggregate> aggregate(const std::vector<EpisodeIndicators>& episodes);

RiskReport build_report(const std::string& risk, const std::string& condition,
                        const std::vector<kernel::EpisodeTranscript>& transcripts,
                        const std::vector<std::string>& transcript_files = {});

json to_json(const Aggregate& a);
json to_json(const RiskReport& r);
RiskReport report_from_json(const json& j);

// Columns: risk,condition,episode_id,indicator,value,offsets
// value is the compact JSON of the indicator; offsets are ';'-joined line numbers.
std::string to_csv(const RiskReport& r);
std::string csv_header();

}  // namespace masrisk::metrics
