#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "nac/enforce/topology.hpp"
#include "nac/model/clock.hpp"
#include "nac/ngfw/rule.hpp"
#include "nac/pdp/engine.hpp"

namespace nac::enforce {

struct SignatureSpec {
    std::uint32_t gid = 1;
    std::uint32_t sid = 0;
    std::uint32_t rev = 1;
    std::string message;
    std::string classification;
    int priority = 2;
};

/// Directory entry with a clear-text secret; hashed when the run starts.
struct ScenarioUser {
    std::string user_id;
    std::string secret;
    std::set<std::string> roles;
    model::UserKind kind = model::UserKind::employee;
    std::string display_name;
    bool enabled = true;
};

/// One script step. `body` is the event document minus validation; fields
/// by type:
///   traffic        src, dst, protocol, application?, signature?, dst_name?, sport?, dport?, rate_kbps?
///   connect        host, credential? {method, principal, secret?} | user + secret, posture? {checks}
///   posture        host, checks
///   scan           host, findings [{vuln_id, severity}]
///   remediate      host, check
///   register_guest host, name, email?, sponsor?, valid_for_ms, connect? (default true)
///   admin          host, action (terminate|disable|reenable|reevaluate), reason?
///   alert          line
///   resolve        fqdn, addresses
///   policy         kind, document (string, or object for JSON policies)
struct ScriptEvent {
    model::Millis at = 0;
    std::string type;
    nlohmann::json body;
};

struct Scenario {
    std::string name;
    std::string description;
    std::uint64_t seed = 1;
    int verifier_iterations = 1000;
    int alert_year = 1970;
    pdp::EngineConfig engine;
    std::vector<ScenarioUser> users;
    nlohmann::json resolver = nlohmann::json::object();
    std::optional<std::int64_t> resolver_ttl_seconds;
    ngfw::Action firewall_default = ngfw::Action::deny;
    std::map<std::uint32_t, SignatureSpec> signatures;
    Topology topology;
    std::vector<ScriptEvent> script;
    std::vector<nlohmann::json> assertions;
};

/// Validates topology, policies, script ordering and host references.
/// Throws InvalidArgument describing the first problem.
Scenario load_scenario(const nlohmann::json& doc);
Scenario load_scenario_file(const std::string& path);

} // namespace nac::enforce
