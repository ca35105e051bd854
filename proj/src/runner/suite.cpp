#include "masrisk/runner/suite.hpp"

#include "masrisk/core/data_dir.hpp"
#include "masrisk/env/registry.hpp"
#include "masrisk/judge/judge.hpp"
#include "masrisk/kernel/episode.hpp"
#include "masrisk/kernel/types.hpp"
#include "masrisk/policy/schema.hpp"

#include <algorithm>
#include <cctype>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace masrisk::runner {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

bool is_remote_cause(const json& outcome) {
    return outcome.value("cause", std::string()).rfind("remote:", 0) == 0;
}

policy::PolicyMap bind_policies(const kernel::Environment& env, const json& specs) {
    policy::PolicyMap out;
    const auto& roster = env.roster();
    for (std::size_t i = 0; i < roster.size(); ++i) {
        if (!env.needs_policy(i)) continue;
        const std::string& label = roster[i].id.label;
        const json* spec = nullptr;
        if (specs.contains(label)) {
            spec = &specs.at(label);
        } else if (specs.contains("*")) {
            spec = &specs.at("*");
        } else {
            throw ValidationError("no policy bound for agent '" + label + "'");
        }
        out[label] = policy::make_policy(*spec, env::strategy_registry());
    }
    for (const auto& [label, spec] : specs.items()) {
        if (label == "*") continue;
        const bool known = std::any_of(roster.begin(), roster.end(), [&](const auto& a) { return a.id.label == label; });
        if (!known) throw ValidationError("policy bound to unknown agent '" + label + "'");
    }
    return out;
}

json episode_config(const SuiteConfig& s, const ConditionConfig& c) {
    return json{{"risk", s.risk}, {"condition", c.name}, {"env", c.env}, {"policies", c.policies}, {"judge", s.judge},
                {"round_cap", c.round_cap}};
}

bool valid_dir_name(const std::string& name) {
    if (name.empty() || name == "." || name == "..") return false;
    return std::all_of(name.begin(), name.end(), [](char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.';
    });
}

}  // namespace

std::uint64_t default_seed(std::uint64_t seed_base, std::size_t condition, int replications, int replication) {
    return seed_base + static_cast<std::uint64_t>(condition) * static_cast<std::uint64_t>(replications) +
           static_cast<std::uint64_t>(replication);
}

std::string episode_name(std::size_t replication) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "ep%04zu", replication);
    return buf;
}

SuiteConfig parse_suite_config(const json& j) {
    if (auto v = policy::schema_violation(policy::load_schema("suite"), j)) throw ValidationError("suite config: " + *v);
    SuiteConfig s;
    s.risk = j.at("risk").get<std::string>();
    try {
        env::risk_info(s.risk);
    } catch (const std::exception&) {
        throw ValidationError("unknown risk id '" + s.risk + "'");
    }
    s.replications = j.value("replications", 1);
    s.seed_base = j.value("seed_base", std::uint64_t{0});
    s.output_dir = j.value("output_dir", std::string("out"));
    s.judge = j.value("judge", json::object());
    if (j.at("conditions").empty()) throw ValidationError("condition list is empty");

    std::shared_ptr<const judge::Backend> backend;
    try {
        backend = judge::make_backend(s.judge);
    } catch (const std::exception& e) {
        throw ValidationError(std::string("judge: ") + e.what());
    }

    std::set<std::string> names;
    std::set<std::uint64_t> seeds;
    const int default_cap = j.value("round_cap", 1000);
    for (std::size_t ci = 0; ci < j.at("conditions").size(); ++ci) {
        const json& cj = j.at("conditions")[ci];
        ConditionConfig c;
        c.name = cj.at("name").get<std::string>();
        if (!valid_dir_name(c.name)) throw ValidationError("condition name '" + c.name + "' is not a valid directory name");
        if (!names.insert(c.name).second) throw ValidationError("duplicate condition name '" + c.name + "'");
        c.env = cj.value("env", json::object());
        c.policies = cj.at("policies");
        c.round_cap = cj.value("round_cap", default_cap);
        if (cj.contains("seeds")) {
            c.seeds = cj.at("seeds").get<std::vector<std::uint64_t>>();
            if (static_cast<int>(c.seeds.size()) != s.replications) {
                throw ValidationError("condition '" + c.name + "' lists " + std::to_string(c.seeds.size()) +
                                      " seeds for " + std::to_string(s.replications) + " replications");
            }
        } else {
            for (int r = 0; r < s.replications; ++r) c.seeds.push_back(default_seed(s.seed_base, ci, s.replications, r));
        }
        for (auto seed : c.seeds) {
            if (!seeds.insert(seed).second) throw ValidationError("seed " + std::to_string(seed) + " is used twice");
        }

        const std::string bad = env::env_params_violation(s.risk, c.env);
        if (!bad.empty()) throw ValidationError("condition '" + c.name + "' env: " + bad);
        // Building the environment once resolves fixtures and the roster for policy binding.
        try {
            auto env = env::make_environment(s.risk, c.env, c.seeds.front(), backend);
            bind_policies(*env, c.policies);
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception& e) {
            throw ValidationError("condition '" + c.name + "': " + e.what());
        }
        s.conditions.push_back(std::move(c));
    }
    return s;
}

SuiteConfig load_suite_config(const fs::path& path) {
    json j;
    try {
        j = read_json_file(path);
    } catch (const std::exception& e) {
        throw ValidationError(e.what());
    }
    return parse_suite_config(j);
}

json to_json(const SummaryTable& s) {
    json conditions = json::array();
    for (const auto& c : s.conditions) {
        json aggregates = json::object();
        for (const auto& [name, a] : c.report.aggregates) aggregates[name] = metrics::to_json(a);
        conditions.push_back(json{{"condition", c.condition}, {"episodes", c.report.episodes.size()}, {"aggregates", aggregates},
                                  {"transcripts", c.transcripts}, {"protocol_violations", c.protocol_violations},
                                  {"remote_failures", c.remote_failures}});
    }
    return json{{"risk", s.risk}, {"conditions", conditions}};
}

std::string summary_csv(const SummaryTable& s) {
    std::ostringstream out;
    out << "risk,condition,indicator,kind,n,count,rate,mean,min,max\n";
    for (const auto& c : s.conditions) {
        for (const auto& [name, a] : c.report.aggregates) {
            out << s.risk << ',' << c.condition << ',' << name << ',' << a.kind << ',' << a.n << ',';
            if (a.kind == "bool") {
                out << a.count << ',' << json(a.rate).dump() << ",,,\n";
            } else {
                out << ",," << json(a.mean).dump() << ',' << json(a.min).dump() << ',' << json(a.max).dump() << '\n';
            }
        }
    }
    return out.str();
}

int exit_code(const SummaryTable& s) {
    int code = kExitOk;
    for (const auto& c : s.conditions) {
        if (c.remote_failures > 0) return kExitRemote;
        if (c.protocol_violations > 0) code = kExitProtocolViolation;
    }
    return code;
}

namespace {

void count_violations(ConditionResult& cr, const std::vector<kernel::EpisodeTranscript>& ts) {
    for (const auto& t : ts) {
        if (!kernel::is_protocol_violation(t)) continue;
        cr.protocol_violations += 1;
        if (is_remote_cause(t.outcome)) cr.remote_failures += 1;
    }
}

void write_outputs(const fs::path& risk_dir, const SummaryTable& table) {
    for (const auto& c : table.conditions) {
        write_file(risk_dir / c.condition / "report.json", metrics::to_json(c.report).dump(2) + "\n");
        write_file(risk_dir / c.condition / "report.csv", metrics::to_csv(c.report));
    }
    write_file(risk_dir / "summary.json", to_json(table).dump(2) + "\n");
    write_file(risk_dir / "summary.csv", summary_csv(table));
}

}  // namespace

kernel::EpisodeTranscript run_episode(const SuiteConfig& config, const ConditionConfig& condition, std::uint64_t seed,
                                      const std::string& episode_id, std::shared_ptr<const judge::Backend> backend) {
    if (!backend) backend = judge::make_backend(config.judge);
    auto env = env::make_environment(config.risk, condition.env, seed, backend);
    const auto policies = bind_policies(*env, condition.policies);
    kernel::EpisodeOptions opt;
    opt.episode_id = episode_id;
    opt.config = episode_config(config, condition);
    opt.seed = seed;
    opt.rounds = condition.round_cap;
    return kernel::run_episode(*env, policies, opt);
}

SummaryTable run_suite(const SuiteConfig& config, int jobs, bool write) {
    struct Job {
        std::size_t condition;
        std::size_t replication;
    };
    std::vector<Job> queue;
    std::vector<std::vector<kernel::EpisodeTranscript>> results(config.conditions.size());
    const auto backend = judge::make_backend(config.judge);
    for (std::size_t ci = 0; ci < config.conditions.size(); ++ci) {
        results[ci].resize(config.conditions[ci].seeds.size());
        for (std::size_t r = 0; r < config.conditions[ci].seeds.size(); ++r) queue.push_back(Job{ci, r});
    }
    const fs::path risk_dir = fs::path(config.output_dir) / config.risk;

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&]() {
        for (std::size_t k = next.fetch_add(1); k < queue.size(); k = next.fetch_add(1)) {
            const Job job = queue[k];
            const ConditionConfig& c = config.conditions[job.condition];
            try {
                auto t = run_episode(config, c, c.seeds[job.replication], c.name + "/" + episode_name(job.replication), backend);
                if (write) {
                    const fs::path dir = risk_dir / c.name;
                    write_file(dir / (episode_name(job.replication) + ".jsonl"), kernel::to_jsonl(t));
                    if (!t.audit.empty()) {
                        write_file(dir / (episode_name(job.replication) + ".audit.jsonl"), kernel::audit_to_jsonl(t));
                    }
                }
                results[job.condition][job.replication] = std::move(t);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    const int width = std::max(1, std::min<int>(jobs, static_cast<int>(queue.size())));
    std::vector<std::thread> pool;
    for (int i = 1; i < width; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);

    SummaryTable table;
    table.risk = config.risk;
    for (std::size_t ci = 0; ci < config.conditions.size(); ++ci) {
        ConditionResult cr;
        cr.condition = config.conditions[ci].name;
        std::vector<std::string> files;
        for (std::size_t r = 0; r < results[ci].size(); ++r) files.push_back(episode_name(r) + ".jsonl");
        for (const auto& f : files) cr.transcripts.push_back(cr.condition + "/" + f);
        cr.report = metrics::build_report(config.risk, cr.condition, results[ci], files);
        count_violations(cr, results[ci]);
        table.conditions.push_back(std::move(cr));
    }
    // Same order as rebuild_reports, which lists condition directories by name.
    std::sort(table.conditions.begin(), table.conditions.end(),
              [](const ConditionResult& a, const ConditionResult& b) { return a.condition < b.condition; });
    if (write) write_outputs(risk_dir, table);
    return table;
}

SummaryTable rebuild_reports(const fs::path& out_dir, const std::string& risk, bool write) {
    const fs::path risk_dir = out_dir / risk;
    if (!fs::is_directory(risk_dir)) throw ValidationError("no results directory " + risk_dir.string());
    std::vector<fs::path> condition_dirs;
    for (const auto& entry : fs::directory_iterator(risk_dir)) {
        if (entry.is_directory()) condition_dirs.push_back(entry.path());
    }
    std::sort(condition_dirs.begin(), condition_dirs.end());

    SummaryTable table;
    table.risk = risk;
    for (const auto& dir : condition_dirs) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            const std::string name = entry.path().filename().string();
            const bool audit = name.size() > 12 && name.compare(name.size() - 12, 12, ".audit.jsonl") == 0;
            if (entry.path().extension() == ".jsonl" && !audit) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) continue;
        ConditionResult cr;
        cr.condition = dir.filename().string();
        std::vector<kernel::EpisodeTranscript> ts;
        std::vector<std::string> names;
        for (const auto& f : files) {
            ts.push_back(kernel::parse_jsonl(read_text_file(f)));
            names.push_back(f.filename().string());
            cr.transcripts.push_back(cr.condition + "/" + names.back());
        }
        cr.report = metrics::build_report(risk, cr.condition, ts, names);
        count_violations(cr, ts);
        table.conditions.push_back(std::move(cr));
    }
    if (write) write_outputs(risk_dir, table);
    return table;
}

}  // namespace masrisk::runner
