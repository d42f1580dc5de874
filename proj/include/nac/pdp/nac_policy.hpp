#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "nac/identity/directory.hpp"
#include "nac/model/address.hpp"

namespace nac::pdp {

struct RoleBinding {
    std::string role;
    int vlan = 0;
    /// Label of the firewall rule slice installed for sessions in this role.
    std::string ruleset;
};

enum class TerminateAction { quarantine_vlan, shut_port };

/// Role → VLAN map plus the isolation VLANs. Role order is priority order:
/// a user holding several roles is granted the first one listed here.
struct NacPolicy {
    std::vector<RoleBinding> roles;
    int quarantine_vlan = 0;
    int registration_vlan = 0;
    int guest_vlan = 0;
    std::string guest_ruleset = "guest";
    /// Empty: no firewall commands are issued.
    std::string firewall_id;
    model::Ipv4Prefix address_pool = model::Ipv4Prefix::parse("10.0.0.0/16");
    identity::DeviceAllowlist device_profiles;
    TerminateAction on_terminate = TerminateAction::quarantine_vlan;

    const RoleBinding* binding(std::string_view role) const;
    /// VLANs in 1..4094, role names unique, and the quarantine and
    /// registration VLANs distinct from every role and guest VLAN.
    void validate() const;
    /// VLANs that only reach their own members.
    std::vector<int> isolated_vlans() const { return {quarantine_vlan, registration_vlan}; }
};

void to_json(nlohmann::json& j, const NacPolicy& policy);
void from_json(const nlohmann::json& j, NacPolicy& policy);

} // namespace nac::pdp
