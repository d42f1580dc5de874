#include "nac/enforce/topology.hpp"

#include "nac/model/errors.hpp"
#include "nac/model/json_util.hpp"

#include <algorithm>
#include <deque>

#include <fmt/format.h>

namespace nac::enforce {

namespace {

bool contains(const std::vector<std::string>& v, std::string_view s)
{
    return std::find(v.begin(), v.end(), s) != v.end();
}

} // namespace

void Topology::validate() const
{
    std::set<std::string> names;
    for (const auto& z : zones) {
        if (z.empty() || !names.insert(z).second) {
            throw InvalidArgument(fmt::format("duplicate or empty zone '{}'", z));
        }
    }
    std::set<std::pair<std::string, std::string>> pairs;
    std::set<std::string> link_ids;
    for (const auto& l : links) {
        if (!link_ids.insert(l.id).second) throw InvalidArgument(fmt::format("duplicate link '{}'", l.id));
        if (!contains(zones, l.a) || !contains(zones, l.b)) {
            throw InvalidArgument(
                fmt::format("link '{}' joins unknown zone '{}'", l.id, contains(zones, l.a) ? l.b : l.a));
        }
        if (l.a == l.b) throw InvalidArgument(fmt::format("link '{}' loops on zone '{}'", l.id, l.a));
        if (!pairs.insert(std::minmax(l.a, l.b)).second) {
            throw InvalidArgument(fmt::format("second link between '{}' and '{}'", l.a, l.b));
        }
    }
    std::set<std::string> switch_ids;
    for (const auto& s : switches) {
        if (!switch_ids.insert(s.id).second) throw InvalidArgument(fmt::format("duplicate switch '{}'", s.id));
        std::set<std::string> ports(s.ports.begin(), s.ports.end());
        if (ports.size() != s.ports.size()) throw InvalidArgument(fmt::format("switch '{}' repeats a port", s.id));
    }
    std::set<std::string> host_names;
    std::set<std::pair<std::string, std::string>> used_ports;
    std::set<model::Ipv4Address> ips;
    std::set<model::MacAddress> macs;
    for (const auto& h : hosts) {
        if (!host_names.insert(h.name).second) throw InvalidArgument(fmt::format("duplicate host '{}'", h.name));
        if (!contains(zones, h.zone)) {
            throw InvalidArgument(fmt::format("host '{}' in unknown zone '{}'", h.name, h.zone));
        }
        if (!has_port(h.switch_id, h.port_id)) {
            throw InvalidArgument(fmt::format("host '{}' on unknown port {}/{}", h.name, h.switch_id, h.port_id));
        }
        if (!used_ports.insert({h.switch_id, h.port_id}).second) {
            throw InvalidArgument(fmt::format("host '{}' shares port {}/{}", h.name, h.switch_id, h.port_id));
        }
        if (!ips.insert(h.ip).second) throw InvalidArgument(fmt::format("host '{}' reuses an address", h.name));
        if (!macs.insert(h.mac).second) throw InvalidArgument(fmt::format("host '{}' reuses a MAC", h.name));
    }
    std::set<std::string> sensor_ids;
    for (const auto& s : sensors) {
        if (!sensor_ids.insert(s.id).second) throw InvalidArgument(fmt::format("duplicate sensor '{}'", s.id));
        if (s.type == SensorType::ids_tap && !contains(zones, s.where)) {
            throw InvalidArgument(fmt::format("tap '{}' on unknown zone '{}'", s.id, s.where));
        }
        if (s.type == SensorType::inline_ips && !link_ids.contains(s.where)) {
            throw InvalidArgument(fmt::format("inline sensor '{}' on unknown link '{}'", s.id, s.where));
        }
    }
    std::set<std::string> fw_ids;
    for (const auto& f : firewalls) {
        if (!fw_ids.insert(f.id).second) throw InvalidArgument(fmt::format("duplicate firewall '{}'", f.id));
        for (const auto& l : f.links) {
            if (!link_ids.contains(l)) {
                throw InvalidArgument(fmt::format("firewall '{}' on unknown link '{}'", f.id, l));
            }
        }
    }
}

const HostSpec* Topology::host(std::string_view name) const
{
    for (const auto& h : hosts) {
        if (h.name == name) return &h;
    }
    return nullptr;
}

const HostSpec* Topology::host_by_ip(model::Ipv4Address ip) const
{
    for (const auto& h : hosts) {
        if (h.ip == ip) return &h;
    }
    return nullptr;
}

bool Topology::has_port(std::string_view switch_id, std::string_view port_id) const
{
    for (const auto& s : switches) {
        if (s.id == switch_id) return contains(s.ports, port_id);
    }
    return false;
}

bool Topology::has_firewall(std::string_view id) const
{
    return std::any_of(firewalls.begin(), firewalls.end(), [&](const FirewallSpec& f) { return f.id == id; });
}

void to_json(nlohmann::json& j, const Topology& t)
{
    auto switches = nlohmann::json::array();
    for (const auto& s : t.switches) {
        switches.push_back({{"id", s.id}, {"ports", s.ports}, {"default_vlan", s.default_vlan}});
    }
    auto links = nlohmann::json::array();
    for (const auto& l : t.links) links.push_back({{"id", l.id}, {"a", l.a}, {"b", l.b}});
    auto hosts = nlohmann::json::array();
    for (const auto& h : t.hosts) {
        hosts.push_back({{"name", h.name},
                         {"mac", h.mac},
                         {"ip", h.ip},
                         {"zone", h.zone},
                         {"switch", h.switch_id},
                         {"port", h.port_id},
                         {"device_class", model::to_string(h.device_class)},
                         {"managed", h.managed}});
    }
    auto sensors = nlohmann::json::array();
    for (const auto& s : t.sensors) {
        nlohmann::json o{{"id", s.id}, {"signatures", s.signatures}};
        if (s.type == SensorType::ids_tap) {
            o["type"] = "ids-tap";
            o["zone"] = s.where;
        } else {
            o["type"] = "inline-ips";
            o["link"] = s.where;
        }
        sensors.push_back(o);
    }
    auto firewalls = nlohmann::json::array();
    for (const auto& f : t.firewalls) firewalls.push_back({{"id", f.id}, {"links", f.links}});
    j = nlohmann::json{{"switches", switches}, {"zones", t.zones},   {"links", links},
                       {"hosts", hosts},       {"sensors", sensors}, {"firewalls", firewalls}};
}

void from_json(const nlohmann::json& j, Topology& t)
{
    using model::optional_field;
    using model::required;
    t = Topology{};
    for (const auto& s : required<nlohmann::json>(j, "switches")) {
        t.switches.push_back({required<std::string>(s, "id"), required<std::vector<std::string>>(s, "ports"),
                              optional_field<int>(s, "default_vlan").value_or(1)});
    }
    t.zones = required<std::vector<std::string>>(j, "zones");
    for (const auto& l : optional_field<nlohmann::json>(j, "links").value_or(nlohmann::json::array())) {
        t.links.push_back(
            {required<std::string>(l, "id"), required<std::string>(l, "a"), required<std::string>(l, "b")});
    }
    for (const auto& h : required<nlohmann::json>(j, "hosts")) {
        HostSpec spec;
        spec.name = required<std::string>(h, "name");
        spec.mac = required<model::MacAddress>(h, "mac");
        spec.ip = required<model::Ipv4Address>(h, "ip");
        spec.zone = required<std::string>(h, "zone");
        spec.switch_id = required<std::string>(h, "switch");
        spec.port_id = required<std::string>(h, "port");
        const auto cls = optional_field<std::string>(h, "device_class").value_or("laptop");
        const auto parsed = model::parse_device_class(cls);
        if (!parsed) throw InvalidArgument(fmt::format("host '{}': unknown device_class '{}'", spec.name, cls));
        spec.device_class = *parsed;
        spec.managed = optional_field<bool>(h, "managed").value_or(true);
        t.hosts.push_back(std::move(spec));
    }
    for (const auto& s : optional_field<nlohmann::json>(j, "sensors").value_or(nlohmann::json::array())) {
        SensorSpec spec;
        spec.id = required<std::string>(s, "id");
        const auto type = required<std::string>(s, "type");
        if (type == "ids-tap") {
            spec.type = SensorType::ids_tap;
            spec.where = required<std::string>(s, "zone");
        } else if (type == "inline-ips") {
            spec.type = SensorType::inline_ips;
            spec.where = required<std::string>(s, "link");
        } else {
            throw InvalidArgument(fmt::format("sensor '{}': unknown type '{}'", spec.id, type));
        }
        const auto sigs = optional_field<std::vector<std::uint32_t>>(s, "signatures").value_or(std::vector<std::uint32_t>{});
        spec.signatures = {sigs.begin(), sigs.end()};
        t.sensors.push_back(std::move(spec));
    }
    for (const auto& f : optional_field<nlohmann::json>(j, "firewalls").value_or(nlohmann::json::array())) {
        t.firewalls.push_back({required<std::string>(f, "id"), required<std::vector<std::string>>(f, "links")});
    }
    t.validate();
}

std::optional<Route> route(const Topology& topo, const std::string& from, const std::string& to)
{
    if (!contains(topo.zones, from) || !contains(topo.zones, to)) {
        throw InvalidArgument(fmt::format("route between unknown zones '{}' and '{}'", from, to));
    }
    // Sorted adjacency makes BFS discovery order lexicographic in the path.
    std::map<std::string, std::map<std::string, std::string>> adj;
    for (const auto& l : topo.links) {
        adj[l.a][l.b] = l.id;
        adj[l.b][l.a] = l.id;
    }
    std::map<std::string, std::string> parent;
    std::set<std::string> seen{from};
    std::deque<std::string> queue{from};
    while (!queue.empty() && !seen.contains(to) ) {
        const auto z = queue.front();
        queue.pop_front();
        for (const auto& [next, _] : adj[z]) {
            if (seen.insert(next).second) {
                parent[next] = z;
                queue.push_back(next);
            }
        }
    }
    if (!seen.contains(to)) {
        return std::nullopt;
    }
    Route r;
    for (std::string z = to;; z = parent.at(z)) {
        r.zones.push_back(z);
        if (z == from) break;
    }
    std::reverse(r.zones.begin(), r.zones.end());
    for (std::size_t i = 0; i + 1 < r.zones.size(); ++i) {
        r.links.push_back(adj[r.zones[i]][r.zones[i + 1]]);
    }
    return r;
}

} // namespace nac::enforce
