#include "nac/enforce/scenario.hpp"

#include "nac/identity/directory.hpp"
#include "nac/model/errors.hpp"
#include "nac/model/json_util.hpp"
#include "nac/threat/event.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace nac::enforce {

namespace {

using model::optional_field;
using model::required;
using nlohmann::json;

std::string policy_text(const json& value)
{
    if (value.is_string()) return value.get<std::string>();
    if (value.is_array()) {
        std::string out;
        for (const auto& line : value) {
            out += line.get<std::string>();
            out += '\n';
        }
        return out;
    }
    return value.dump();
}

void require_host(const Topology& topo, const json& body, std::string_view field)
{
    const auto name = required<std::string>(body, field);
    if (!topo.host(name)) {
        throw InvalidArgument(fmt::format("unknown host '{}'", name));
    }
}

void check_event(const Topology& topo, const ScriptEvent& ev)
{
    const auto& b = ev.body;
    if (ev.type == "traffic") {
        require_host(topo, b, "src");
        require_host(topo, b, "dst");
        const auto proto = required<std::string>(b, "protocol");
        const auto p = ngfw::parse_protocol(proto);
        if (!p || *p == ngfw::Protocol::any) {
            throw InvalidArgument(fmt::format("traffic protocol '{}' is not tcp, udp, icmp or http", proto));
        }
    } else if (ev.type == "connect" || ev.type == "posture" || ev.type == "scan" || ev.type == "remediate" ||
               ev.type == "register_guest" || ev.type == "admin") {
        require_host(topo, b, "host");
        if (ev.type == "admin") {
            const auto action = required<std::string>(b, "action");
            if (action != "terminate" && action != "disable" && action != "reenable" && action != "reevaluate") {
                throw InvalidArgument(fmt::format("unknown admin action '{}'", action));
            }
        }
        if (ev.type == "remediate") required<std::string>(b, "check");
        if (ev.type == "register_guest") {
            required<std::string>(b, "name");
            required<model::Millis>(b, "valid_for_ms");
        }
    } else if (ev.type == "alert") {
        required<std::string>(b, "line");
    } else if (ev.type == "resolve") {
        required<std::string>(b, "fqdn");
        required<std::vector<model::Ipv4Address>>(b, "addresses");
    } else if (ev.type == "policy") {
        const auto k = required<std::string>(b, "kind");
        if (!pdp::parse_policy_kind(k)) throw InvalidArgument(fmt::format("unknown policy kind '{}'", k));
        required<json>(b, "document");
    } else {
        throw InvalidArgument(fmt::format("unknown event type '{}'", ev.type));
    }
}

} // namespace

Scenario load_scenario(const json& doc)
{
    Scenario sc;
    sc.name = optional_field<std::string>(doc, "name").value_or("scenario");
    sc.description = optional_field<std::string>(doc, "description").value_or("");
    sc.seed = optional_field<std::uint64_t>(doc, "seed").value_or(1);
    sc.verifier_iterations = optional_field<int>(doc, "verifier_iterations").value_or(1000);
    sc.alert_year = optional_field<int>(doc, "alert_year").value_or(1970);
    try {
        sc.topology = required<Topology>(doc, "topology");
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(fmt::format("topology: {}", e.what()));
    }

    const auto policies = required<json>(doc, "policies");
    sc.engine.nac_document = policy_text(required<json>(policies, "nac"));
    sc.engine.posture_document = policy_text(required<json>(policies, "posture"));
    if (policies.contains("threat")) sc.engine.threat_document = policy_text(policies.at("threat"));
    if (policies.contains("firewall")) sc.engine.firewall_document = policy_text(policies.at("firewall"));
    sc.engine.dedup_window = optional_field<model::Millis>(doc, "dedup_window_ms").value_or(threat::kDefaultDedupWindow);

    // Policies must load, and the NAC firewall must exist in the topology.
    {
        identity::Directory probe_dir;
        model::VirtualClock probe_clock;
        pdp::Engine probe(sc.engine, probe_dir, probe_clock);
        const auto fw = probe.nac_policy().firewall_id;
        if (!fw.empty() && !sc.topology.has_firewall(fw)) {
            throw InvalidArgument(fmt::format("nac policy firewall '{}' is not in the topology", fw));
        }
    }

    for (const auto& u : optional_field<json>(doc, "directory").value_or(json::array())) {
        ScenarioUser user;
        user.user_id = required<std::string>(u, "user_id");
        user.secret = optional_field<std::string>(u, "secret").value_or("");
        user.roles = required<std::set<std::string>>(u, "roles");
        const auto k = optional_field<std::string>(u, "kind").value_or("employee");
        const auto parsed = model::parse_user_kind(k);
        if (!parsed) throw InvalidArgument(fmt::format("user '{}': unknown kind '{}'", user.user_id, k));
        user.kind = *parsed;
        user.display_name = optional_field<std::string>(u, "display_name").value_or("");
        user.enabled = optional_field<bool>(u, "enabled").value_or(true);
        sc.users.push_back(std::move(user));
    }

    sc.resolver = optional_field<json>(doc, "resolver").value_or(json::object());
    sc.resolver_ttl_seconds = optional_field<std::int64_t>(doc, "resolver_ttl_seconds");
    const auto def = optional_field<std::string>(doc, "firewall_default").value_or("deny");
    const auto action = ngfw::parse_action(def);
    if (!action) throw InvalidArgument(fmt::format("unknown firewall_default '{}'", def));
    sc.firewall_default = *action;

    for (const auto& s : optional_field<json>(doc, "signatures").value_or(json::array())) {
        SignatureSpec sig;
        sig.gid = optional_field<std::uint32_t>(s, "gid").value_or(1);
        sig.sid = required<std::uint32_t>(s, "sid");
        sig.rev = optional_field<std::uint32_t>(s, "rev").value_or(1);
        sig.message = required<std::string>(s, "message");
        sig.classification = optional_field<std::string>(s, "classification").value_or("");
        sig.priority = optional_field<int>(s, "priority").value_or(2);
        if (sig.priority < 1) throw InvalidArgument(fmt::format("signature {} priority must be >= 1", sig.sid));
        sc.signatures[sig.sid] = sig;
    }

    model::Millis last = 0;
    const auto script = optional_field<json>(doc, "script").value_or(json::array());
    for (std::size_t i = 0; i < script.size(); ++i) {
        try {
            ScriptEvent ev;
            ev.at = required<model::Millis>(script[i], "at");
            ev.type = required<std::string>(script[i], "type");
            ev.body = script[i];
            if (ev.at < last) {
                throw InvalidArgument(fmt::format("time {} precedes the previous event at {}", ev.at, last));
            }
            last = ev.at;
            check_event(sc.topology, ev);
            if (ev.type == "traffic" && ev.body.contains("signature") &&
                !sc.signatures.contains(ev.body.at("signature").get<std::uint32_t>())) {
                throw InvalidArgument("traffic names an undeclared signature");
            }
            sc.script.push_back(std::move(ev));
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(fmt::format("script event {}: {}", i, e.what()));
        }
    }
    for (const auto& a : optional_field<json>(doc, "assertions").value_or(json::array())) {
        required<std::string>(a, "type");
        sc.assertions.push_back(a);
    }
    return sc;
}

Scenario load_scenario_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw NotFound(fmt::format("cannot read scenario {}", path));
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return load_scenario(model::parse_json(ss.str()));
}

} // namespace nac::enforce
