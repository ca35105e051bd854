#include "masrisk/metrics/report.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace masrisk::metrics {

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string join_offsets(const std::vector<std::size_t>& offsets) {
    std::string out;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(offsets[i]);
    }
    return out;
}

}  // namespace

std::map<std::string, Aggregate> aggregate(const std::vector<EpisodeIndicators>& episodes) {
    std::map<std::string, std::vector<json>> by_name;
    for (const auto& e : episodes) {
        for (const auto& [name, ind] : e.values) by_name[name].push_back(ind.value);
    }
    std::map<std::string, Aggregate> out;
    for (const auto& [name, values] : by_name) {
        const bool all_bool = std::all_of(values.begin(), values.end(), [](const json& v) { return v.is_boolean(); });
        const bool all_num = std::all_of(values.begin(), values.end(), [](const json& v) { return v.is_number(); });
        Aggregate a;
        a.n = values.size();
        if (all_bool) {
            a.kind = "bool";
            for (const auto& v : values) a.count += v.get<bool>() ? 1 : 0;
            a.rate = static_cast<double>(a.count) / static_cast<double>(a.n);
        } else if (all_num) {
            a.kind = "number";
            a.min = std::numeric_limits<double>::infinity();
            a.max = -std::numeric_limits<double>::infinity();
            double sum = 0;
            for (const auto& v : values) {
                const double x = v.get<double>();
                sum += x;
                a.min = std::min(a.min, x);
                a.max = std::max(a.max, x);
            }
            a.mean = sum / static_cast<double>(a.n);
        } else {
            continue;
        }
        out[name] = a;
    }
    return out;
}

RiskReport build_report(const std::string& risk, const std::string& condition,
                        const std::vector<kernel::EpisodeTranscript>& transcripts,
                        const std::vector<std::string>& transcript_files) {
    RiskReport r;
    r.risk = risk;
    r.condition = condition;
    for (std::size_t i = 0; i < transcripts.size(); ++i) {
        EpisodeIndicators e;
        e.episode_id = transcripts[i].episode_id;
        if (i < transcript_files.size()) e.transcript = transcript_files[i];
        e.values = evaluate_episode(risk, transcripts[i]);
        r.episodes.push_back(std::move(e));
    }
    r.aggregates = aggregate(r.episodes);
    return r;
}

json to_json(const Aggregate& a) {
    if (a.kind == "bool") return json{{"kind", a.kind}, {"n", a.n}, {"count", a.count}, {"rate", a.rate}};
    return json{{"kind", a.kind}, {"n", a.n}, {"mean", a.mean}, {"min", a.min}, {"max", a.max}};
}

json to_json(const RiskReport& r) {
    json episodes = json::array();
    for (const auto& e : r.episodes) {
        json values = json::object(), provenance = json::object();
        for (const auto& [name, ind] : e.values) {
            values[name] = ind.value;
            provenance[name] = ind.offsets;
        }
        json ej{{"episode_id", e.episode_id}, {"values", values}, {"provenance", provenance}};
        if (!e.transcript.empty()) ej["transcript"] = e.transcript;
        episodes.push_back(ej);
    }
    json aggregates = json::object();
    for (const auto& [name, a] : r.aggregates) aggregates[name] = to_json(a);
    return json{{"risk", r.risk}, {"condition", r.condition}, {"episodes", episodes}, {"aggregates", aggregates}};
}

RiskReport report_from_json(const json& j) {
    RiskReport r;
    r.risk = j.at("risk").get<std::string>();
    r.condition = j.at("condition").get<std::string>();
    for (const auto& ej : j.at("episodes")) {
        EpisodeIndicators e;
        e.episode_id = ej.at("episode_id").get<std::string>();
        e.transcript = ej.value("transcript", std::string());
        for (const auto& [name, v] : ej.at("values").items()) {
            e.values[name] = Indicator{v, ej.at("provenance").at(name).get<std::vector<std::size_t>>()};
        }
        r.episodes.push_back(std::move(e));
    }
    r.aggregates = aggregate(r.episodes);
    return r;
}

std::string csv_header() { return "risk,condition,episode_id,indicator,value,offsets\n"; }

std::string to_csv(const RiskReport& r) {
    std::ostringstream out;
    out << csv_header();
    for (const auto& e : r.episodes) {
        for (const auto& [name, ind] : e.values) {
            out << csv_field(r.risk) << ',' << csv_field(r.condition) << ',' << csv_field(e.episode_id) << ','
                << csv_field(name) << ',' << csv_field(ind.value.dump()) << ',' << join_offsets(ind.offsets) << '\n';
        }
    }
    return out.str();
}

}  // namespace masrisk::metrics
