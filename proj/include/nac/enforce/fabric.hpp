#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "nac/enforce/command.hpp"
#include "nac/enforce/topology.hpp"
#include "nac/ngfw/rule.hpp"

namespace nac::enforce {

struct PortState {
    int vlan = 1;
    bool up = true;
    std::uint32_t rate_limit_kbps = 0;
};

struct FirewallState {
    ngfw::RuleSet policy;
    /// session_id → (ref, prefix rules).
    std::map<std::string, std::pair<std::string, ngfw::RuleSet>> prefixes;

    /// Session prefixes (ordered by session id) ahead of the policy.
    ngfw::RuleSet effective() const;
};

/// Enforcement-point state of the simulated network.
class Fabric {
public:
    Fabric(const Topology& topo, std::set<int> isolated_vlans);

    /// Throws NotFound for a switch port or firewall absent from the
    /// topology. SetPortVlan also brings a shut port back up.
    void apply(const EnforcementCommand& cmd);

    const PortState& port(const std::string& switch_id, const std::string& port_id) const;
    const FirewallState& firewall(const std::string& id) const;
    bool isolated(int vlan) const { return isolated_.contains(vlan); }
    void set_isolated(std::set<int> vlans) { isolated_ = std::move(vlans); }

    /// Layer-2 reachability between two ports: both up, and when either
    /// sits in an isolation VLAN, both in the same VLAN.
    bool l2_reachable(const HostSpec& src, const HostSpec& dst) const;

    std::uint64_t last_command() const { return last_command_; }

private:
    std::map<std::pair<std::string, std::string>, PortState> ports_;
    std::map<std::string, FirewallState> firewalls_;
    std::set<int> isolated_;
    std::uint64_t last_command_ = 0;
};

} // namespace nac::enforce
