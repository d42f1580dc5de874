#include "nac/enforce/fabric.hpp"

#include "nac/model/errors.hpp"

#include <fmt/format.h>

namespace nac::enforce {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

} // namespace

ngfw::RuleSet FirewallState::effective() const
{
    ngfw::RuleSet head;
    for (const auto& [_, entry] : prefixes) {
        head = ngfw::RuleSet::concat(head, entry.second);
    }
    return ngfw::RuleSet::concat(head, policy);
}

Fabric::Fabric(const Topology& topo, std::set<int> isolated_vlans) : isolated_(std::move(isolated_vlans))
{
    for (const auto& s : topo.switches) {
        for (const auto& p : s.ports) {
            ports_[{s.id, p}] = PortState{s.default_vlan, true, 0};
        }
    }
    for (const auto& f : topo.firewalls) {
        firewalls_[f.id];
    }
}

void Fabric::apply(const EnforcementCommand& cmd)
{
    auto port_ref = [&](const std::string& sw, const std::string& port) -> PortState& {
        const auto it = ports_.find({sw, port});
        if (it == ports_.end()) {
            throw NotFound(fmt::format("no port {}/{} in topology", sw, port));
        }
        return it->second;
    };
    auto fw_ref = [&](const std::string& id) -> FirewallState& {
        const auto it = firewalls_.find(id);
        if (it == firewalls_.end()) {
            throw NotFound(fmt::format("no firewall {} in topology", id));
        }
        return it->second;
    };
    std::visit(overloaded{
                   [&](const SetPortVlan& c) {
                       auto& p = port_ref(c.switch_id, c.port_id);
                       p.vlan = c.vlan;
                       p.up = true;
                   },
                   [&](const ShutPort& c) { port_ref(c.switch_id, c.port_id).up = false; },
                   [&](const SetRateLimit& c) { port_ref(c.switch_id, c.port_id).rate_limit_kbps = c.kbps; },
                   [&](const InstallRuleset& c) {
                       auto& fw = fw_ref(c.firewall_id);
                       if (c.session_id.empty()) {
                           fw.policy = c.rules;
                       } else {
                           fw.prefixes[c.session_id] = {c.ref, c.rules};
                       }
                   },
                   [&](const RemoveRuleset& c) {
                       auto& fw = fw_ref(c.firewall_id);
                       if (c.session_id.empty()) {
                           fw.policy = {};
                       } else {
                           fw.prefixes.erase(c.session_id);
                       }
                   },
               },
               cmd.body);
    last_command_ = std::max(last_command_, cmd.command_seq);
}

const PortState& Fabric::port(const std::string& switch_id, const std::string& port_id) const
{
    const auto it = ports_.find({switch_id, port_id});
    if (it == ports_.end()) {
        throw NotFound(fmt::format("no port {}/{} in topology", switch_id, port_id));
    }
    return it->second;
}

const FirewallState& Fabric::firewall(const std::string& id) const
{
    const auto it = firewalls_.find(id);
    if (it == firewalls_.end()) {
        throw NotFound(fmt::format("no firewall {} in topology", id));
    }
    return it->second;
}

bool Fabric::l2_reachable(const HostSpec& src, const HostSpec& dst) const
{
    const auto& a = port(src.switch_id, src.port_id);
    const auto& b = port(dst.switch_id, dst.port_id);
    if (!a.up || !b.up) {
        return false;
    }
    if (isolated(a.vlan) || isolated(b.vlan)) {
        return a.vlan == b.vlan;
    }
    return true;
}

} // namespace nac::enforce
