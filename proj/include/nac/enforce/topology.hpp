#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "nac/model/address.hpp"
#include "nac/model/identity_types.hpp"

namespace nac::enforce {

struct SwitchSpec {
    std::string id;
    std::vector<std::string> ports;
    /// VLAN every port starts in.
    int default_vlan = 1;
};

struct LinkSpec {
    std::string id;
    std::string a;
    std::string b;
};

enum class SensorType { ids_tap, inline_ips };

struct SensorSpec {
    std::string id;
    SensorType type = SensorType::ids_tap;
    /// Zone for a tap, link for an inline device.
    std::string where;
    std::set<std::uint32_t> signatures;
};

struct FirewallSpec {
    std::string id;
    /// Links whose crossing traffic the firewall inspects.
    std::vector<std::string> links;
};

struct HostSpec {
    std::string name;
    model::MacAddress mac;
    model::Ipv4Address ip;
    std::string zone;
    std::string switch_id;
    std::string port_id;
    model::DeviceClass device_class = model::DeviceClass::laptop;
    bool managed = true;
};

/// Zone graph with the hosts, sensors and firewalls placed on it. Zones
/// are named segments; links join two zones.
struct Topology {
    std::vector<SwitchSpec> switches;
    std::vector<std::string> zones;
    std::vector<LinkSpec> links;
    std::vector<HostSpec> hosts;
    std::vector<SensorSpec> sensors;
    std::vector<FirewallSpec> firewalls;

    /// Unique names, known references, one host per port, at most one link
    /// per zone pair. Throws InvalidArgument naming the offender.
    void validate() const;

    const HostSpec* host(std::string_view name) const;
    const HostSpec* host_by_ip(model::Ipv4Address ip) const;
    bool has_port(std::string_view switch_id, std::string_view port_id) const;
    bool has_firewall(std::string_view id) const;
};

void to_json(nlohmann::json& j, const Topology& t);
void from_json(const nlohmann::json& j, Topology& t);

struct Route {
    std::vector<std::string> zones;
    /// links[i] joins zones[i] and zones[i + 1].
    std::vector<std::string> links;
};

/// Shortest zone path; ties go to the lexicographically smallest zone
/// sequence. nullopt when the zones are not connected.
std::optional<Route> route(const Topology& topo, const std::string& from, const std::string& to);

} // namespace nac::enforce
