#include "masrisk/core/data_dir.hpp"
#include "masrisk/policy/remote.hpp"
#include "masrisk/runner/replay.hpp"
#include "masrisk/runner/suite.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

using namespace masrisk;

namespace {

struct Overrides {
    std::string out;
    std::string risk;
    std::optional<std::uint64_t> seed_base;
};

runner::SuiteConfig load(const std::string& path, const Overrides& o) {
    json j = read_json_file(path);
    if (!o.risk.empty()) {
        if (j.value("risk", std::string()) != o.risk) {
            throw runner::ValidationError("config is for risk '" + j.value("risk", std::string()) + "', not '" + o.risk + "'");
        }
    }
    if (o.seed_base) j["seed_base"] = *o.seed_base;
    if (!o.out.empty()) j["output_dir"] = o.out;
    return runner::parse_suite_config(j);
}

void print_summary(const runner::SummaryTable& s) {
    for (const auto& c : s.conditions) {
        std::cout << s.risk << " " << c.condition << ": " << c.report.episodes.size() << " episodes";
        if (c.protocol_violations) std::cout << ", " << c.protocol_violations << " protocol violations";
        std::cout << "\n";
        for (const auto& [name, a] : c.report.aggregates) {
            std::cout << "  " << name << " = " << metrics::to_json(a).dump() << "\n";
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent risk simulation suite"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides o;
    int jobs = 1;
    std::uint64_t seed_base = 0;

    auto* run = app.add_subcommand("run", "Run every condition of a suite config");
    run->add_option("--config", config_path, "Suite config JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--out", o.out, "Output directory (overrides output_dir)");
    run->add_option("--jobs", jobs, "Parallel episode workers")->check(CLI::PositiveNumber);
    run->add_option("--risk", o.risk, "Expected risk id");
    auto* seed_opt = run->add_option("--seed-base", seed_base, "Base seed (overrides seed_base)");

    std::vector<std::string> transcripts;
    auto* replay = app.add_subcommand("replay", "Re-simulate transcripts and compare snapshots");
    replay->add_option("transcripts", transcripts, "Transcript JSONL files")->required()->check(CLI::ExistingFile);

    std::string report_out = "out";
    std::string report_risk;
    auto* report = app.add_subcommand("report", "Rebuild reports from transcripts on disk");
    report->add_option("--out", report_out, "Output directory of a previous run");
    report->add_option("--risk", report_risk, "Risk id")->required();

    auto* validate = app.add_subcommand("validate-config", "Check a suite config without running it");
    validate->add_option("--config", config_path, "Suite config JSON")->required()->check(CLI::ExistingFile);
    validate->add_option("--risk", o.risk, "Expected risk id");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            if (*seed_opt) o.seed_base = seed_base;
            const auto cfg = load(config_path, o);
            const auto table = runner::run_suite(cfg, jobs);
            print_summary(table);
            std::cout << "wrote " << cfg.output_dir << "/" << cfg.risk << "\n";
            return runner::exit_code(table);
        }
        if (*replay) {
            int code = 0;
            for (const auto& path : transcripts) {
                const auto r = runner::replay_file(path);
                if (r.match) {
                    std::cout << path << ": match\n";
                    continue;
                }
                code = 1;
                if (r.parse_error_line) {
                    std::cout << path << ": parse error at line " << *r.parse_error_line << " (" << r.detail << ")\n";
                } else if (r.divergent_round) {
                    std::cout << path << ": diverges at round " << *r.divergent_round << " (" << r.detail << ")\n";
                } else {
                    std::cout << path << ": mismatch (" << r.detail << ")\n";
                }
            }
            return code;
        }
        if (*report) {
            const auto table = runner::rebuild_reports(report_out, report_risk);
            print_summary(table);
            return runner::exit_code(table);
        }
        if (*validate) {
            const auto cfg = load(config_path, o);
            std::size_t episodes = 0;
            for (const auto& c : cfg.conditions) episodes += c.seeds.size();
            std::cout << "ok: risk " << cfg.risk << ", " << cfg.conditions.size() << " conditions, " << episodes << " episodes\n";
            return runner::kExitOk;
        }
    } catch (const runner::ValidationError& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return runner::kExitValidation;
    } catch (const policy::RemoteError& e) {
        std::cerr << "remote failure: " << e.what() << "\n";
        return runner::kExitRemote;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return runner::kExitValidation;
    }
    return runner::kExitOk;
}
