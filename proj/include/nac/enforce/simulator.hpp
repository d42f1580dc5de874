#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "nac/enforce/fabric.hpp"
#include "nac/enforce/scenario.hpp"
#include "nac/identity/directory.hpp"
#include "nac/model/clock.hpp"
#include "nac/ngfw/matcher.hpp"
#include "nac/ngfw/resolver.hpp"
#include "nac/pdp/engine.hpp"

namespace nac::enforce {

struct TrafficResult {
    std::vector<std::string> observed_by;
    bool alert_emitted = false;
    std::vector<std::string> alert_lines;
    bool delivered = false;
    /// "port-down", "vlan-isolation", "no-route", "firewall:<id>", "ips:<id>".
    std::string dropped_by;
    bool throttled = false;
    std::optional<ngfw::Verdict> firewall;
    /// Set for signature-carrying events.
    std::optional<bool> contained;
    std::string containing_action;
};

void to_json(nlohmann::json& j, const TrafficResult& r);

/// Deterministic fold of a scenario script over the fabric and one engine.
/// The simulator drives the engine through the same entry points the
/// service uses; IDS alerts are rendered as fast-alert lines and parsed back.
class Simulator {
public:
    explicit Simulator(Scenario scenario);
    ~Simulator();

    /// Runs one script event at its time. Throws InvalidArgument for events
    /// the scenario loader would reject.
    nlohmann::json step(const ScriptEvent& ev);
    TrafficResult traffic(const nlohmann::json& body);

    /// Runs the whole script, replays the audit log into a fresh engine and
    /// evaluates the assertions.
    nlohmann::json run();

    pdp::Engine& engine() { return *engine_; }
    const Fabric& fabric() const { return fabric_; }
    const Scenario& scenario() const { return scenario_; }
    model::VirtualClock& clock() { return clock_; }
    identity::Directory& directory() { return *directory_; }

    /// Latest session opened for the host, live or not.
    std::optional<pdp::Session> host_session(const std::string& host) const;

private:
    void sync_commands();
    nlohmann::json connect(const HostSpec& host, const nlohmann::json& body,
                           std::optional<identity::Credential> cred = std::nullopt);
    std::string alert_line(const HostSpec& src, const HostSpec& dst, const nlohmann::json& body,
                           const SignatureSpec& sig) const;

    Scenario scenario_;
    model::VirtualClock clock_;
    std::unique_ptr<identity::Directory> directory_;
    std::unique_ptr<pdp::Engine> engine_;
    Fabric fabric_;
    ngfw::ResolverSnapshot resolver_;
    std::vector<nlohmann::json> event_reports_;
    std::map<std::string, std::pair<int, int>> containment_;
};

/// Directory preloaded with the scenario's users.
std::unique_ptr<identity::Directory> make_directory(const Scenario& scenario);

nlohmann::json run_scenario(const Scenario& scenario);

} // namespace nac::enforce
