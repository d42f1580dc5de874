#pragma once

// Glue between the oracles and the library, shared by the unit and
// acceptance suites.

#include "oracles.hpp"

#include "nac/enforce/scenario.hpp"
#include "nac/enforce/simulator.hpp"
#include "nac/identity/directory.hpp"
#include "nac/model/errors.hpp"
#include "nac/ngfw/matcher.hpp"
#include "nac/ngfw/resolver.hpp"
#include "nac/ngfw/rule.hpp"
#include "nac/pdp/engine.hpp"
#include "nac/threat/correlate.hpp"

#include <fmt/format.h>

#include <memory>
#include <random>

namespace bridge {

using nlohmann::json;

// ---- firewall -------------------------------------------------------------

struct Built {
    nac::ngfw::RuleSet rules;
    nac::ngfw::SessionIndex sessions;
    nac::ngfw::ResolverSnapshot resolver;
};

inline Built build(const oracle::FirewallInstance& inst)
{
    Built b;
    std::string doc = "# generated\n";
    for (const auto& r : inst.rules) doc += r.text() + "\n";
    b.rules = nac::ngfw::parse_rules(doc);
    for (const auto& [id, s] : inst.sessions) {
        b.sessions[id] = {s.user, s.roles, *nac::model::parse_device_class(s.device)};
    }
    std::map<std::string, nac::ngfw::ResolverSnapshot::AddressSet> entries;
    for (const auto& [name, addrs] : inst.dns) {
        for (auto a : addrs) entries[name].insert(nac::model::Ipv4Address(a));
    }
    b.resolver = nac::ngfw::ResolverSnapshot(entries, 0, std::nullopt);
    return b;
}

inline nac::ngfw::PacketContext packet(const oracle::Packet& p)
{
    nac::ngfw::PacketContext pkt;
    pkt.src = nac::model::Ipv4Address(p.src);
    pkt.dst = nac::model::Ipv4Address(p.dst);
    pkt.protocol = *nac::ngfw::parse_protocol(p.proto);
    pkt.application = p.app;
    if (pkt.protocol != nac::ngfw::Protocol::icmp) {
        pkt.src_port = 40000;
        pkt.dst_port = 80;
    }
    pkt.session_ref = p.session;
    pkt.dst_name = p.dst_name;
    return pkt;
}

struct Tally {
    std::size_t checked = 0;
    std::size_t mismatches = 0;
};

/// `instances` random firewalls, each packet judged under both defaults.
inline Tally firewall_suite(std::uint64_t seed, int instances)
{
    using nac::ngfw::Action;
    std::mt19937_64 rng(seed);
    Tally t;
    for (int i = 0; i < instances; ++i) {
        const auto inst = oracle::random_firewall(rng);
        const auto b = build(inst);
        for (const auto def : {Action::deny, Action::permit}) {
            for (const auto& p : inst.packets) {
                const auto want =
                    oracle::evaluate(inst.rules, p, inst.sessions, inst.dns, std::string(nac::ngfw::to_string(def)));
                const auto got = nac::ngfw::match_packet(b.rules, packet(p), b.sessions, b.resolver, {def, 0, false});
                ++t.checked;
                if (std::string(nac::ngfw::to_string(got.action)) != want.action ||
                    got.rule_id.value_or(0) != want.rule) {
                    ++t.mismatches;
                }
            }
        }
    }
    return t;
}

// ---- correlation ----------------------------------------------------------

/// Opens and closes sessions at random and checks `lookups` alert
/// correlations against the linear scan.
inline Tally correlation_suite(std::uint64_t seed, int lookups)
{
    std::mt19937_64 rng(seed);
    Tally t;
    nac::threat::AddressIndex index;
    std::vector<oracle::LiveSession> model;
    while (static_cast<int>(t.checked) < lookups) {
        const auto ip = 0x0a000000u | static_cast<std::uint32_t>(rng() % 24);
        if (rng() % 3 || model.empty()) {
            if (!oracle::owner(model, ip)) {
                model.push_back({fmt::format("s-{}", model.size() + 1), ip, true});
                index.insert(nac::model::Ipv4Address(ip), model.back().id);
            }
        } else {
            auto& s = model[rng() % model.size()];
            if (s.live) {
                s.live = false;
                index.erase(nac::model::Ipv4Address(s.ip), s.id);
            }
        }
        nac::threat::ThreatEvent evt;
        evt.src.addr = nac::model::Ipv4Address(0x0a000000u | static_cast<std::uint32_t>(rng() % 24));
        ++t.checked;
        if (nac::threat::correlate(evt, index) != oracle::owner(model, evt.src.addr.value())) ++t.mismatches;
    }
    return t;
}

// ---- sensor visibility ----------------------------------------------------

struct RandomGraph {
    oracle::Graph graph;
    json topo;
};

/// 2..6 zones with one host each and random links, possibly disconnected.
inline RandomGraph random_graph(std::mt19937_64& rng)
{
    RandomGraph out;
    const int n = 2 + static_cast<int>(rng() % 5);
    json zones = json::array(), links = json::array(), ports = json::array(), hosts = json::array();
    for (int i = 0; i < n; ++i) {
        const auto z = fmt::format("z{}", i);
        out.graph.zones.push_back(z);
        zones.push_back(z);
    }
    for (int i = 0; i < n; ++i) {
        for (int k = i + 1; k < n; ++k) {
            if (rng() % 100 < 45) {
                const auto id = fmt::format("l{}{}", i, k);
                out.graph.links.emplace_back(id, out.graph.zones[i], out.graph.zones[k]);
                if (rng() % 2) links.push_back({{"id", id}, {"a", out.graph.zones[i]}, {"b", out.graph.zones[k]}});
                else links.push_back({{"id", id}, {"a", out.graph.zones[k]}, {"b", out.graph.zones[i]}});
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        ports.push_back(std::to_string(i + 1));
        hosts.push_back({{"name", fmt::format("h{}", i)},
                         {"mac", fmt::format("00:00:00:00:00:{:02x}", i + 1)},
                         {"ip", fmt::format("10.0.0.{}", i + 1)},
                         {"zone", out.graph.zones[i]},
                         {"switch", "sw"},
                         {"port", std::to_string(i + 1)}});
    }
    out.topo = {{"zones", zones}, {"links", links}, {"switches", json::array({{{"id", "sw"}, {"ports", ports}}})},
                {"hosts", hosts}, {"firewalls", json::array()}, {"sensors", json::array()}};
    return out;
}

/// Minimal scenario around a topology: permissive firewall, no users, one
/// signature (sid 7).
inline json scenario_doc(const json& topo)
{
    return {
        {"name", "generated"},
        {"policies",
         {{"nac", {{"roles", json::array({{{"role", "employee"}, {"vlan", 10}}})},
                   {"quarantine_vlan", 99}, {"registration_vlan", 98}, {"guest_vlan", 30}}},
          {"posture", {{"requirements", json::array({{{"check", "av_installed"}, {"value", true}}})}}},
          {"threat", {{"clauses", json::array()}}},
          {"firewall", json::array({"*  *  *  *  any  *  permit"})}}},
        {"directory", json::array()},
        {"signatures", json::array({{{"sid", 7}, {"message", "probe"}, {"priority", 2}}})},
        {"topology", topo},
        {"script", json::array()},
        {"assertions", json::array()},
    };
}

/// Every placement (tap per zone, inline per link, signature matching or
/// not) on `graphs` random topologies, every ordered pair of distinct hosts.
inline Tally visibility_suite(std::uint64_t seed, int graphs)
{
    std::mt19937_64 rng(seed);
    Tally t;
    for (int g = 0; g < graphs; ++g) {
        const auto rg = random_graph(rng);
        std::vector<oracle::Placement> placements;
        for (const auto& z : rg.graph.zones) {
            for (bool m : {false, true}) placements.push_back({true, z, m});
        }
        for (const auto& [id, a, b] : rg.graph.links) {
            for (bool m : {false, true}) placements.push_back({false, id, m});
        }
        for (const auto& p : placements) {
            auto doc = scenario_doc(rg.topo);
            json sensor{{"id", "s"}, {"signatures", p.matches ? json::array({7}) : json::array({8})}};
            sensor["type"] = p.tap ? "ids-tap" : "inline-ips";
            sensor[p.tap ? "zone" : "link"] = p.where;
            doc["topology"]["sensors"] = json::array({sensor});
            nac::enforce::Simulator sim(nac::enforce::load_scenario(doc));
            for (std::size_t s = 0; s < rg.graph.zones.size(); ++s) {
                for (std::size_t d = 0; d < rg.graph.zones.size(); ++d) {
                    if (s == d) continue;
                    const auto r = sim.traffic({{"src", fmt::format("h{}", s)},
                                                {"dst", fmt::format("h{}", d)},
                                                {"protocol", "tcp"},
                                                {"signature", 7}});
                    const auto want = oracle::visibility(rg.graph, p, rg.graph.zones[s], rg.graph.zones[d]);
                    ++t.checked;
                    if ((r.observed_by == std::vector<std::string>{"s"}) != want.observed ||
                        r.alert_emitted != want.alert || r.delivered != want.delivered) {
                        ++t.mismatches;
                    }
                }
            }
        }
    }
    return t;
}

// ---- random engine histories ----------------------------------------------

inline constexpr const char* kNac = R"({
    "roles": [{"role": "employee", "vlan": 10}, {"role": "staff", "vlan": 11}],
    "quarantine_vlan": 99, "registration_vlan": 98, "guest_vlan": 30,
    "firewall_id": "fw1", "address_pool": "10.0.0.0/24"
})";
inline constexpr const char* kPosture = R"({"requirements": [{"check": "av_installed", "value": true}]})";
inline constexpr const char* kPostureStrict =
    R"({"requirements": [{"check": "av_installed", "value": true}, {"check": "patch_level", "op": ">=", "value": 5}]})";
inline constexpr const char* kThreat = R"({"clauses": [
    {"match": {"sid": 1}, "action": {"type": "quarantine"}},
    {"match": {"sid": 2}, "action": {"type": "terminate"}},
    {"match": {"sid": 3}, "action": {"type": "role_change", "deny_applications": ["msn", "skype"]}},
    {"match": {"sid": 4}, "action": {"type": "rate_limit", "kbps": 256}},
    {"match": {"sid": 5}, "action": {"type": "disable"}}
]})";

inline nac::pdp::EngineConfig engine_config()
{
    return {kNac, kPosture, kThreat, "*  *  *  *  any  *  permit", 60000};
}

inline void fill_directory(nac::identity::Directory& dir)
{
    dir.add_user("alice", "a", {"employee"});
    dir.add_user("bob", "b", {"staff", "employee"});
    dir.add_user("carol", "c", {"employee"});
}

struct History {
    std::vector<nac::model::EventEnvelope> log;
    std::string digest;
    std::vector<nac::pdp::Session> sessions;
    std::vector<nac::enforce::EnforcementCommand> commands;
};

/// Drives one engine through `steps` random operations (connects, posture,
/// admin actions, alerts, policy swaps, remediation, checkpoints).
inline History random_history(std::uint64_t seed, int steps)
{
    using namespace nac;
    std::mt19937_64 rng(seed);
    model::VirtualClock clock(1000);
    identity::Directory dir(identity::seeded_random(seed), 20);
    fill_directory(dir);
    pdp::Engine engine(engine_config(), dir, clock);

    auto request = [](const std::string& user, const std::string& secret, int host, std::optional<bool> av) {
        pdp::AccessRequest req;
        req.credential = identity::Credential::password(user, secret);
        req.device.mac = model::MacAddress::parse(fmt::format("aa:00:00:00:00:{:02x}", host));
        req.device.device_class = model::DeviceClass::laptop;
        req.location.attachment = model::SwitchPort{"sw1", std::to_string(host)};
        if (av) {
            posture::PostureReport r;
            r.device = req.device;
            r.checks["av_installed"] = *av;
            r.checks["patch_level"] = std::int64_t{3};
            req.posture = r;
        }
        return req;
    };
    const char* users[][2] = {{"alice", "a"}, {"bob", "b"}, {"carol", "c"}, {"mallory", "m"}};
    for (int step = 0; step < steps; ++step) {
        clock.advance(static_cast<model::Millis>(rng() % 5000));
        const auto sessions = engine.sessions();
        const std::string any_id = sessions.empty() ? "s-1" : sessions[rng() % sessions.size()].id;
        try {
            switch (rng() % 10) {
            case 0:
            case 1:
            case 2: {
                const auto* u = users[rng() % 4];
                const int host = 1 + static_cast<int>(rng() % 6);
                const int pick = static_cast<int>(rng() % 3);
                engine.request_access(request(u[0], rng() % 8 ? u[1] : "bad", host,
                                              pick == 0 ? std::nullopt : std::optional<bool>(pick == 1)));
                break;
            }
            case 3:
                engine.submit_posture(*request("x", "x", 1 + static_cast<int>(rng() % 6), rng() % 2).posture);
                break;
            case 4:
                engine.terminate(any_id, "random");
                break;
            case 5:
                if (rng() % 2) engine.disable(any_id, "random");
                else engine.reenable(any_id);
                break;
            case 6:
                engine.reevaluate(any_id);
                break;
            case 7:
                if (!sessions.empty()) {
                    const auto& s = sessions[rng() % sessions.size()];
                    threat::ThreatEvent e;
                    e.sig = {1, 1 + static_cast<std::uint32_t>(rng() % 6), 1};
                    e.message = "random alert";
                    e.priority = 1;
                    e.src = {s.ip, 4444};
                    e.dst = {model::Ipv4Address::parse("192.0.2.1"), 80};
                    e.observed_at = clock.now();
                    engine.handle_threat(e);
                }
                break;
            case 8:
                engine.update_policy(pdp::PolicyKind::posture, rng() % 2 ? kPosture : kPostureStrict);
                break;
            case 9:
                if (rng() % 2) engine.checkpoint();
                else engine.remediate(any_id, "patch_level");
                break;
            }
        } catch (const Conflict&) {
        } catch (const NotFound&) {
        }
    }
    engine.checkpoint();
    return {engine.audit_since(0), engine.session_digest(), engine.sessions(), engine.commands_since(0)};
}

/// Replays a history into a fresh engine with an independently built
/// directory; true when the digest matches byte for byte.
inline bool replays_identically(const History& h)
{
    nac::model::VirtualClock clock;
    nac::identity::Directory dir(nac::identity::seeded_random(999), 20);
    fill_directory(dir);
    nac::pdp::Engine copy(engine_config(), dir, clock);
    copy.replay(h.log);
    return copy.session_digest() == h.digest && copy.sessions() == h.sessions && copy.commands_since(0) == h.commands;
}

} // namespace bridge
