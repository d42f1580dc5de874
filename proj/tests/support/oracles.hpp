#pragma once

// Brute-force reference models used by the unit and acceptance suites.
// They work from their own plain representations and share no matching
// code with the library.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace oracle {

// ---- firewall -------------------------------------------------------------

struct Rule {
    std::string user = "*";
    std::string device = "*";
    std::string src = "*";
    std::string dst = "*";
    std::string proto = "any";
    std::string app = "*";
    std::string action = "deny";

    std::string text() const { return fmt::format("{} {} {} {} {} {} {}", user, device, src, dst, proto, app, action); }
};

struct Session {
    std::string user;
    std::set<std::string> roles;
    std::string device;
};

struct Packet {
    std::uint32_t src = 0;
    std::uint32_t dst = 0;
    std::string proto = "tcp";
    std::string app;
    std::optional<std::string> session; // id into the session map
    std::optional<std::string> dst_name;
};

struct Outcome {
    std::string action;
    std::size_t rule = 0; // 0 = default
};

inline std::uint32_t dotted(const std::string& s)
{
    unsigned a = 0, b = 0, c = 0, d = 0;
    std::sscanf(s.c_str(), "%u.%u.%u.%u", &a, &b, &c, &d);
    return (a << 24) | (b << 16) | (c << 8) | d;
}

inline std::string dotted(std::uint32_t v)
{
    return fmt::format("{}.{}.{}.{}", v >> 24, (v >> 16) & 255, (v >> 8) & 255, v & 255);
}

inline bool is_name(const std::string& field)
{
    for (char c : field) {
        if (c >= 'a' && c <= 'z') return true;
    }
    return false;
}

// Bit-by-bit prefix comparison.
inline bool in_prefix(const std::string& field, std::uint32_t addr)
{
    const auto slash = field.find('/');
    const auto net = dotted(field.substr(0, slash));
    const int len = slash == std::string::npos ? 32 : std::stoi(field.substr(slash + 1));
    for (int i = 0; i < len; ++i) {
        const int bit = 31 - i;
        if (((net >> bit) & 1u) != ((addr >> bit) & 1u)) return false;
    }
    return true;
}

using Resolver = std::map<std::string, std::set<std::uint32_t>>;

inline bool addr_ok(const std::string& field, std::uint32_t addr, const std::optional<std::string>& name,
                    const Resolver& dns)
{
    if (field == "*") return true;
    if (is_name(field)) {
        if (name && *name == field) return true;
        const auto it = dns.find(field);
        return it != dns.end() && it->second.count(addr) > 0;
    }
    return in_prefix(field, addr);
}

inline Outcome evaluate(const std::vector<Rule>& rules, const Packet& p, const std::map<std::string, Session>& sessions,
                        const Resolver& dns, const std::string& default_action)
{
    const Session* s = nullptr;
    if (p.session) {
        const auto it = sessions.find(*p.session);
        if (it != sessions.end()) s = &it->second;
    }
    for (std::size_t i = 0; i < rules.size(); ++i) {
        const auto& r = rules[i];
        if (r.user != "*" && !(s && (s->user == r.user || s->roles.count(r.user)))) continue;
        if (r.device != "*" && !(s && s->device == r.device)) continue;
        if (!addr_ok(r.src, p.src, std::nullopt, dns)) continue;
        if (!addr_ok(r.dst, p.dst, p.dst_name, dns)) continue;
        if (!(r.proto == "any" || r.proto == p.proto || (r.proto == "tcp" && p.proto == "http"))) continue;
        if (r.app != "*" && r.app != p.app) continue;
        return {r.action, i + 1};
    }
    return {default_action, 0};
}

struct FirewallInstance {
    std::vector<Rule> rules;
    std::map<std::string, Session> sessions;
    Resolver dns;
    std::vector<Packet> packets;
};

/// Small instances over a narrow value space so that rules collide often.
inline FirewallInstance random_firewall(std::mt19937_64& rng, int packets = 12)
{
    auto pick = [&](const std::vector<std::string>& v) { return v[rng() % v.size()]; };
    const std::vector<std::string> users{"alice", "bob", "employee", "guest", "contractor"};
    const std::vector<std::string> devices{"laptop", "ipad", "printer", "phone"};
    const std::vector<std::string> names{"www.msn.com", "cdn.example.org"};
    const std::vector<std::string> protos{"tcp", "udp", "icmp", "http", "any"};
    const std::vector<std::string> packet_protos{"tcp", "udp", "icmp", "http"};
    const std::vector<std::string> apps{"msn", "web", "ssh"};
    auto address = [&] { return 0x0a000000u | static_cast<std::uint32_t>(rng() % 12); };
    auto field = [&]() -> std::string {
        switch (rng() % 5) {
        case 0: return "*";
        case 1: return pick(names);
        case 2: return dotted(address());
        default: {
            const int len = std::vector<int>{0, 24, 29, 30, 31, 32}[rng() % 6];
            return fmt::format("{}/{}", dotted(address()), len);
        }
        }
    };

    FirewallInstance inst;
    for (const auto& n : names) {
        for (int i = 0; i < 12; ++i) {
            if (rng() % 3 == 0) inst.dns[n].insert(0x0a000000u | static_cast<std::uint32_t>(i));
        }
        if (inst.dns[n].empty()) inst.dns[n].insert(0x0a000000u);
    }
    inst.sessions["s-1"] = {"alice", {"employee"}, "laptop"};
    inst.sessions["s-2"] = {"bob", {"contractor", "employee"}, "ipad"};
    inst.sessions["s-3"] = {"g-1", {"guest"}, "ipad"};
    inst.sessions["s-4"] = {"printer-7", {"printer"}, "printer"};

    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
        Rule r;
        r.user = rng() % 2 ? "*" : pick(users);
        r.device = rng() % 2 ? "*" : pick(devices);
        r.src = rng() % 2 ? "*" : field();
        r.dst = field();
        r.proto = pick(protos);
        r.app = rng() % 2 ? "*" : pick(apps);
        r.action = rng() % 2 ? "permit" : "deny";
        inst.rules.push_back(r);
    }
    for (int i = 0; i < packets; ++i) {
        Packet p;
        p.src = address();
        p.dst = address();
        p.proto = pick(packet_protos);
        p.app = rng() % 4 == 0 ? "" : pick(apps);
        switch (rng() % 6) {
        case 0: break;
        case 1: p.session = "s-99"; break;
        default: p.session = fmt::format("s-{}", 1 + rng() % 4); break;
        }
        if (rng() % 4 == 0) p.dst_name = pick(names);
        inst.packets.push_back(p);
    }
    return inst;
}

// ---- correlation ----------------------------------------------------------

struct LiveSession {
    std::string id;
    std::uint32_t ip = 0;
    bool live = true;
};

/// Linear scan: the unique live session holding the address.
inline std::optional<std::string> owner(const std::vector<LiveSession>& sessions, std::uint32_t ip, bool* ambiguous = nullptr)
{
    std::optional<std::string> found;
    int n = 0;
    for (const auto& s : sessions) {
        if (s.live && s.ip == ip) {
            found = s.id;
            ++n;
        }
    }
    if (ambiguous) *ambiguous = n > 1;
    return n == 1 ? found : std::nullopt;
}

// ---- sensor visibility ----------------------------------------------------

struct Graph {
    std::vector<std::string> zones;
    // (link id, a, b)
    std::vector<std::tuple<std::string, std::string, std::string>> links;
};

/// Every simple path, keeping the shortest and, among those, the
/// lexicographically smallest zone sequence.
inline std::optional<std::pair<std::vector<std::string>, std::vector<std::string>>>
best_path(const Graph& g, const std::string& from, const std::string& to)
{
    std::optional<std::pair<std::vector<std::string>, std::vector<std::string>>> best;
    std::vector<std::string> zones{from};
    std::vector<std::string> links;
    std::set<std::string> seen{from};
    auto dfs = [&](auto&& self, const std::string& at) -> void {
        if (at == to) {
            if (!best || zones.size() < best->first.size() ||
                (zones.size() == best->first.size() && zones < best->first)) {
                best = {zones, links};
            }
            return;
        }
        for (const auto& [id, a, b] : g.links) {
            std::string next;
            if (a == at) next = b;
            else if (b == at) next = a;
            else continue;
            if (seen.count(next)) continue;
            seen.insert(next);
            zones.push_back(next);
            links.push_back(id);
            self(self, next);
            zones.pop_back();
            links.pop_back();
            seen.erase(next);
        }
    };
    dfs(dfs, from);
    return best;
}

struct Placement {
    bool tap = true;      // tap in a zone, otherwise inline on a link
    std::string where;
    bool matches = false; // sensor carries the attack signature
};

struct Seen {
    bool observed = false;
    bool alert = false;
    bool delivered = true;
};

/// What one sensor sees of a flow, walking the path hop by hop. An inline
/// device that matches drops the flow there.
inline Seen visibility(const Graph& g, const Placement& s, const std::string& src_zone, const std::string& dst_zone)
{
    Seen out;
    const auto path = best_path(g, src_zone, dst_zone);
    if (!path) {
        if (s.tap && s.where == src_zone) {
            out.observed = true;
            out.alert = s.matches;
        }
        out.delivered = false;
        return out;
    }
    const auto& [zones, links] = *path;
    for (std::size_t i = 0; i < zones.size(); ++i) {
        if (s.tap && s.where == zones[i]) {
            out.observed = true;
            out.alert = s.matches;
        }
        if (i < links.size() && !s.tap && s.where == links[i]) {
            out.observed = true;
            out.alert = s.matches;
            if (s.matches) {
                out.delivered = false;
                return out;
            }
        }
    }
    return out;
}

} // namespace oracle
