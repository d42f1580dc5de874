#include "nac/pdp/nac_policy.hpp"

#include "nac/model/errors.hpp"
#include "nac/model/json_util.hpp"

#include <set>

#include <fmt/format.h>

namespace nac::pdp {

const RoleBinding* NacPolicy::binding(std::string_view role) const
{
    for (const auto& b : roles) {
        if (b.role == role) return &b;
    }
    return nullptr;
}

void NacPolicy::validate() const
{
    auto check_vlan = [](int vlan, std::string_view what) {
        if (vlan < 1 || vlan > 4094) {
            throw InvalidArgument(fmt::format("{} VLAN {} outside 1..4094", what, vlan));
        }
    };
    check_vlan(quarantine_vlan, "quarantine");
    check_vlan(registration_vlan, "registration");
    check_vlan(guest_vlan, "guest");
    std::set<std::string> names;
    for (const auto& b : roles) {
        if (b.role.empty()) {
            throw InvalidArgument("role binding with empty role name");
        }
        if (!names.insert(b.role).second) {
            throw InvalidArgument(fmt::format("role '{}' bound twice", b.role));
        }
        check_vlan(b.vlan, fmt::format("role '{}'", b.role));
    }
    for (const int isolated : isolated_vlans()) {
        if (isolated == guest_vlan) {
            throw InvalidArgument(fmt::format("isolation VLAN {} equals the guest VLAN", isolated));
        }
        for (const auto& b : roles) {
            if (b.vlan == isolated) {
                throw InvalidArgument(fmt::format("isolation VLAN {} equals the VLAN of role '{}'", isolated, b.role));
            }
        }
    }
    for (const auto& [mac, entry] : device_profiles.entries()) {
        if (entry.role.empty()) {
            throw InvalidArgument(fmt::format("device profile {} has no role", mac.to_string()));
        }
    }
}

void to_json(nlohmann::json& j, const NacPolicy& policy)
{
    auto roles = nlohmann::json::array();
    for (const auto& b : policy.roles) {
        roles.push_back({{"role", b.role}, {"vlan", b.vlan}, {"ruleset", b.ruleset}});
    }
    auto profiles = nlohmann::json::array();
    for (const auto& [_, e] : policy.device_profiles.entries()) {
        profiles.push_back(e);
    }
    j = nlohmann::json{
        {"roles", roles},
        {"quarantine_vlan", policy.quarantine_vlan},
        {"registration_vlan", policy.registration_vlan},
        {"guest_vlan", policy.guest_vlan},
        {"guest_ruleset", policy.guest_ruleset},
        {"firewall_id", policy.firewall_id},
        {"address_pool", policy.address_pool},
        {"device_profiles", profiles},
        {"on_terminate", policy.on_terminate == TerminateAction::shut_port ? "shut_port" : "quarantine_vlan"},
    };
}

void from_json(const nlohmann::json& j, NacPolicy& policy)
{
    using model::optional_field;
    using model::required;
    policy = NacPolicy{};
    for (const auto& r : required<nlohmann::json>(j, "roles")) {
        RoleBinding b;
        b.role = required<std::string>(r, "role");
        b.vlan = required<int>(r, "vlan");
        b.ruleset = optional_field<std::string>(r, "ruleset").value_or(b.role);
        policy.roles.push_back(std::move(b));
    }
    policy.quarantine_vlan = required<int>(j, "quarantine_vlan");
    policy.registration_vlan = required<int>(j, "registration_vlan");
    policy.guest_vlan = required<int>(j, "guest_vlan");
    policy.guest_ruleset = optional_field<std::string>(j, "guest_ruleset").value_or("guest");
    policy.firewall_id = optional_field<std::string>(j, "firewall_id").value_or("");
    if (const auto pool = optional_field<model::Ipv4Prefix>(j, "address_pool")) {
        policy.address_pool = *pool;
    }
    if (const auto profiles = optional_field<std::vector<identity::DeviceAllowlist::Entry>>(j, "device_profiles")) {
        for (const auto& e : *profiles) {
            policy.device_profiles.add(e);
        }
    }
    const auto on_terminate = optional_field<std::string>(j, "on_terminate").value_or("quarantine_vlan");
    if (on_terminate == "quarantine_vlan") {
        policy.on_terminate = TerminateAction::quarantine_vlan;
    } else if (on_terminate == "shut_port") {
        policy.on_terminate = TerminateAction::shut_port;
    } else {
        throw InvalidArgument(fmt::format("unknown on_terminate '{}'", on_terminate));
    }
    policy.validate();
}

} // namespace nac::pdp
