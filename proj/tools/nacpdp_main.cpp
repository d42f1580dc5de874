// nacpdp: policy decision point service and offline tools.

#include "CLI11.hpp"
#include "json.hpp"
#include "nac/enforce/scenario.hpp"
#include "nac/enforce/simulator.hpp"
#include "nac/identity/verifier.hpp"
#include "nac/model/errors.hpp"
#include "nac/model/json_util.hpp"
#include "nac/ngfw/rule.hpp"
#include "nac/pdp/audit.hpp"
#include "nac/pdp/engine.hpp"
#include "nac/service/config.hpp"
#include "nac/service/server.hpp"
#include "nac/threat/fast_alert.hpp"
#include "nac/threat/policy.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace {

using nlohmann::json;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

int serve(const std::string& config_path)
{
    auto config = nac::service::load_config(config_path);
    nac::service::Service service(std::move(config));
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    service.start();
    while (!g_stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    spdlog::info("shutting down");
    service.stop();
    return 0;
}

int simulate(const std::string& scenario_path, const std::string& report_path, const std::string& audit_out)
{
    const auto start = std::chrono::steady_clock::now();
    nac::enforce::Simulator sim(nac::enforce::load_scenario_file(scenario_path));
    const auto report = sim.run();
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (!audit_out.empty()) {
        std::ofstream out(audit_out);
        for (const auto& rec : sim.engine().audit_since(0)) out << nlohmann::json(rec).dump() << "\n";
    }
    const auto text = report.dump(2) + "\n";
    if (report_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream(report_path) << text;
    }
    for (const auto& a : report.at("assertions")) {
        std::cerr << fmt::format("{} assertion {} ({})\n", a.at("passed").get<bool>() ? "PASS" : "FAIL",
                                 a.at("index").get<int>(), a.at("type").get<std::string>());
    }
    for (const auto& [zone, c] : report.at("containment").items()) {
        std::cerr << fmt::format("containment {} {}\n", zone, c.at("ratio").get<std::string>());
    }
    std::cerr << fmt::format("replay {} in {:.1f} ms\n",
                             report.at("replay").at("match").get<bool>() ? "match" : "MISMATCH", ms);
    return report.at("passed").get<bool>() ? 0 : 1;
}

int lint(const std::string& firewall, const std::string& threat_path)
{
    int status = 0;
    if (!firewall.empty()) {
        try {
            const auto rules = nac::ngfw::parse_rules(nac::service::read_file(firewall));
            std::cout << fmt::format("{}: {} rules ok\n", firewall, rules.size());
        } catch (const nac::ngfw::RuleParseError& e) {
            for (const auto& d : e.diagnostics()) {
                std::cout << fmt::format("{}:{}\n", firewall, nac::ngfw::to_string(d));
            }
            status = 1;
        }
    }
    if (!threat_path.empty()) {
        try {
            const auto policy =
                nac::model::parse_json(nac::service::read_file(threat_path)).get<nac::threat::ThreatPolicy>();
            std::cout << fmt::format("{}: {} clauses ok\n", threat_path, policy.clauses.size());
        } catch (const nac::InvalidArgument& e) {
            std::cout << fmt::format("{}: {}\n", threat_path, e.what());
            status = 1;
        }
    }
    return status;
}

int replay(const std::string& audit, const std::string& config_path, const std::string& scenario_path)
{
    const auto records = nac::pdp::read_audit_file(audit);
    nac::model::VirtualClock clock(0);
    std::unique_ptr<nac::identity::Directory> directory;
    nac::pdp::EngineConfig engine_config;
    if (!scenario_path.empty()) {
        const auto scenario = nac::enforce::load_scenario_file(scenario_path);
        directory = nac::enforce::make_directory(scenario);
        engine_config = scenario.engine;
    } else {
        const auto config = nac::service::load_config(config_path);
        directory = std::make_unique<nac::identity::Directory>();
        std::ifstream in(config.directory_path);
        directory->load_jsonl(in);
        engine_config = nac::service::engine_config(config);
    }
    nac::pdp::Engine engine(engine_config, *directory, clock);
    engine.replay(records);
    std::cout << json{{"records", records.size()},
                      {"sessions", engine.sessions().size()},
                      {"digest", engine.session_digest()}}
                     .dump()
              << "\n";
    return 0;
}

int parse_alerts(bool syslog, int year)
{
    int status = 0;
    std::string line;
    std::size_t n = 0;
    while (std::getline(std::cin, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
            const nac::threat::AlertParseOptions opts{year, nac::threat::kDefaultDedupWindow};
            const auto evt = syslog ? nac::threat::parse_syslog_alert(line, 0, opts)
                                    : nac::threat::parse_fast_alert(line, opts);
            std::cout << json(evt).dump() << "\n";
        } catch (const nac::InvalidArgument& e) {
            std::cerr << fmt::format("line {}: {}\n", n, e.what());
            status = 1;
        }
    }
    return status;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"NAC policy decision point"};
    app.require_subcommand(1);

    std::string config_path;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    serve_cmd->add_option("--config", config_path, "Service config (JSON)")->required()->check(CLI::ExistingFile);

    std::string scenario_path, report_path, audit_out;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation scenario");
    sim_cmd->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
    sim_cmd->add_option("--report", report_path, "Write the report here instead of stdout");
    sim_cmd->add_option("--audit-out", audit_out, "Write the run's audit log (JSON lines)");

    std::string fw_path, threat_path;
    auto* lint_cmd = app.add_subcommand("lint-policy", "Validate a policy file");
    auto* fw_opt = lint_cmd->add_option("--firewall", fw_path, "Firewall rules")->check(CLI::ExistingFile);
    auto* th_opt = lint_cmd->add_option("--threat", threat_path, "Threat policy")->check(CLI::ExistingFile);
    lint_cmd->require_option(1, 2);
    (void)fw_opt;
    (void)th_opt;

    std::string audit_path, replay_config, replay_scenario;
    auto* replay_cmd = app.add_subcommand("replay", "Rebuild state from an audit log and print its digest");
    replay_cmd->add_option("--audit", audit_path, "Audit log (JSON lines)")->required()->check(CLI::ExistingFile);
    auto* rc = replay_cmd->add_option("--config", replay_config, "Service config for the initial policies")
                   ->check(CLI::ExistingFile);
    auto* rs = replay_cmd->add_option("--scenario", replay_scenario, "Scenario for the initial policies")
                   ->check(CLI::ExistingFile);
    rc->excludes(rs);

    bool syslog = false;
    int year = 1970;
    auto* parse_cmd = app.add_subcommand("parse-alert", "Normalize fast-alert lines from stdin");
    parse_cmd->add_flag("--syslog", syslog, "Lines are syslog datagrams");
    parse_cmd->add_option("--year", year, "Year for the timestamps");

    std::string secret;
    int iterations = nac::identity::kDefaultIterations;
    auto* hash_cmd = app.add_subcommand("hash-secret", "Print a verifier for a directory record");
    hash_cmd->add_option("secret", secret, "Secret")->required();
    hash_cmd->add_option("--iterations", iterations, "PBKDF2 iterations");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve_cmd) return serve(config_path);
        if (*sim_cmd) return simulate(scenario_path, report_path, audit_out);
        if (*lint_cmd) return lint(fw_path, threat_path);
        if (*replay_cmd) {
            if (replay_config.empty() && replay_scenario.empty()) {
                std::cerr << "replay needs --config or --scenario for the initial policies\n";
                return 2;
            }
            return replay(audit_path, replay_config, replay_scenario);
        }
        if (*parse_cmd) return parse_alerts(syslog, year);
        if (*hash_cmd) {
            std::cout << nac::identity::make_verifier(secret, nac::identity::system_random(), iterations) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
