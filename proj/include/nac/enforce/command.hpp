#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "nac/ngfw/rule.hpp"

namespace nac::enforce {

struct SetPortVlan {
    std::string switch_id;
    std::string port_id;
    int vlan = 0;
    bool operator==(const SetPortVlan&) const = default;
};

struct ShutPort {
    std::string switch_id;
    std::string port_id;
    bool operator==(const ShutPort&) const = default;
};

struct SetRateLimit {
    std::string switch_id;
    std::string port_id;
    std::uint32_t kbps = 0;
    bool operator==(const SetRateLimit&) const = default;
};

/// `session_id` empty means the firewall-wide policy; otherwise `rules` is
/// the session's prefix, evaluated ahead of the policy.
struct InstallRuleset {
    std::string firewall_id;
    std::string ref;
    std::string session_id;
    ngfw::RuleSet rules;
    bool operator==(const InstallRuleset&) const = default;
};

struct RemoveRuleset {
    std::string firewall_id;
    std::string ref;
    std::string session_id;
    bool operator==(const RemoveRuleset&) const = default;
};

using CommandBody = std::variant<SetPortVlan, ShutPort, SetRateLimit, InstallRuleset, RemoveRuleset>;

struct EnforcementCommand {
    std::uint64_t command_seq = 0;
    CommandBody body;

    bool operator==(const EnforcementCommand&) const = default;
};

/// Compact trace form, e.g. "SetPortVlan(sw1,3,20)" or
/// "InstallRuleset(fw1,staff,s-1,2 rules)".
std::string describe(const EnforcementCommand& cmd);
std::string describe(const CommandBody& body);

/// {"seq": n, "type": "set_port_vlan", ...}; rulesets travel as rule text.
void to_json(nlohmann::json& j, const EnforcementCommand& cmd);
void from_json(const nlohmann::json& j, EnforcementCommand& cmd);

} // namespace nac::enforce
