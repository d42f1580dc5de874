#include "nac/enforce/simulator.hpp"

#include "nac/model/errors.hpp"
#include "nac/model/json_util.hpp"
#include "nac/threat/fast_alert.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace nac::enforce {

using model::optional_field;
using model::required;
using nlohmann::json;

void to_json(json& j, const TrafficResult& r)
{
    j = json{{"observed_by", r.observed_by},
             {"alert_emitted", r.alert_emitted},
             {"alerts", r.alert_lines},
             {"delivered", r.delivered},
             {"dropped_by", r.dropped_by},
             {"throttled", r.throttled}};
    if (r.firewall) j["firewall"] = *r.firewall;
    if (r.contained) {
        j["contained"] = *r.contained;
        j["containing_action"] = r.containing_action;
    }
}

std::unique_ptr<identity::Directory> make_directory(const Scenario& scenario)
{
    auto dir = std::make_unique<identity::Directory>(identity::seeded_random(scenario.seed),
                                                     scenario.verifier_iterations);
    for (const auto& u : scenario.users) {
        if (u.secret.empty()) {
            identity::DirectoryRecord rec;
            rec.user_id = u.user_id;
            rec.display_name = u.display_name;
            rec.kind = u.kind;
            rec.roles = u.roles;
            rec.enabled = u.enabled;
            dir->add(std::move(rec));
            continue;
        }
        dir->add_user(u.user_id, u.secret, u.roles, u.kind, u.display_name);
        if (!u.enabled) {
            auto records = dir->records();
            for (auto& rec : records) {
                if (rec.user_id == u.user_id) {
                    rec.enabled = false;
                }
            }
            auto fresh = std::make_unique<identity::Directory>(identity::seeded_random(scenario.seed),
                                                               scenario.verifier_iterations);
            for (auto& rec : records) fresh->add(std::move(rec));
            dir = std::move(fresh);
        }
    }
    return dir;
}

namespace {

std::set<int> isolated_of(const pdp::Engine& engine)
{
    const auto v = engine.nac_policy().isolated_vlans();
    return {v.begin(), v.end()};
}

model::Zone zone_of(const HostSpec& host)
{
    const auto z = model::parse_zone(host.zone);
    if (!z) {
        throw InvalidArgument(fmt::format("host '{}' sits in zone '{}', which has no NAC zone type", host.name,
                                          host.zone));
    }
    return *z;
}

} // namespace

Simulator::Simulator(Scenario scenario)
    : scenario_(std::move(scenario)),
      clock_(0),
      directory_(make_directory(scenario_)),
      engine_(std::make_unique<pdp::Engine>(scenario_.engine, *directory_, clock_)),
      fabric_(scenario_.topology, isolated_of(*engine_)),
      resolver_(ngfw::ResolverSnapshot::from_json(scenario_.resolver, 0, scenario_.resolver_ttl_seconds))
{
    // Every firewall starts with the configured policy.
    for (const auto& fw : scenario_.topology.firewalls) {
        fabric_.apply({0, InstallRuleset{fw.id, "policy", "", engine_->firewall_rules()}});
    }
}

Simulator::~Simulator() = default;

void Simulator::sync_commands()
{
    for (const auto& cmd : engine_->commands_since(fabric_.last_command())) {
        fabric_.apply(cmd);
    }
    fabric_.set_isolated(isolated_of(*engine_));
}

std::optional<pdp::Session> Simulator::host_session(const std::string& name) const
{
    const auto* host = scenario_.topology.host(name);
    if (!host) {
        throw InvalidArgument(fmt::format("unknown host '{}'", name));
    }
    std::optional<pdp::Session> best;
    for (auto& s : engine_->sessions()) {
        if (s.device.mac != host->mac) continue;
        if (!best || s.ordinal() > best->ordinal()) best = std::move(s);
    }
    return best;
}

json Simulator::connect(const HostSpec& host, const json& body, std::optional<identity::Credential> cred)
{
    pdp::AccessRequest req;
    req.device = {host.mac, host.device_class, host.managed};
    req.location = {model::SwitchPort{host.switch_id, host.port_id}, zone_of(host)};
    if (cred) {
        req.credential = *cred;
    } else if (const auto c = optional_field<identity::Credential>(body, "credential")) {
        req.credential = *c;
    } else if (const auto user = optional_field<std::string>(body, "user")) {
        req.credential = identity::Credential::password(*user, required<std::string>(body, "secret"));
    } else {
        req.credential = identity::Credential::mac_only(host.mac);
    }
    if (const auto p = optional_field<json>(body, "posture")) {
        posture::PostureReport report;
        report.device = req.device;
        report.collected_at = clock_.now();
        json doc{{"device", req.device}, {"checks", required<json>(*p, "checks")}, {"collected_at", clock_.now()}};
        req.posture = doc.get<posture::PostureReport>();
    }
    req.ip = host.ip;
    req.requested_at = clock_.now();
    const auto out = engine_->request_access(req);
    json r{{"verdict", pdp::to_string(out.decision.kind)}, {"rule", pdp::to_string(out.decision.rule)}};
    if (out.session_id) {
        r["session_id"] = *out.session_id;
        r["state"] = pdp::to_string(engine_->session(*out.session_id)->state);
    }
    return r;
}

std::string Simulator::alert_line(const HostSpec& src, const HostSpec& dst, const json& body,
                                  const SignatureSpec& sig) const
{
    const auto proto = *ngfw::parse_protocol(required<std::string>(body, "protocol"));
    threat::ThreatEvent evt;
    evt.sig = {sig.gid, sig.sid, sig.rev};
    evt.message = sig.message;
    evt.category = sig.classification;
    evt.priority = sig.priority;
    evt.observed_at = clock_.now();
    evt.src.addr = src.ip;
    evt.dst.addr = dst.ip;
    switch (proto) {
    case ngfw::Protocol::icmp:
        evt.protocol = threat::Proto::icmp;
        break;
    case ngfw::Protocol::udp:
        evt.protocol = threat::Proto::udp;
        evt.src.port = optional_field<std::uint16_t>(body, "sport").value_or(49152);
        evt.dst.port = optional_field<std::uint16_t>(body, "dport").value_or(53);
        break;
    default:
        evt.protocol = threat::Proto::tcp;
        evt.src.port = optional_field<std::uint16_t>(body, "sport").value_or(49152);
        evt.dst.port = optional_field<std::uint16_t>(body, "dport").value_or(80);
        break;
    }
    return threat::format_fast_alert(evt, scenario_.alert_year);
}

TrafficResult Simulator::traffic(const json& body)
{
    const auto& topo = scenario_.topology;
    const auto* src = topo.host(required<std::string>(body, "src"));
    const auto* dst = topo.host(required<std::string>(body, "dst"));
    if (!src || !dst) {
        throw InvalidArgument("traffic between unknown hosts");
    }
    const auto signature = optional_field<std::uint32_t>(body, "signature");
    const SignatureSpec* sig = nullptr;
    if (signature) {
        const auto it = scenario_.signatures.find(*signature);
        if (it == scenario_.signatures.end()) throw InvalidArgument("undeclared signature");
        sig = &it->second;
    }
    const auto src_session_before = engine_->session_for_ip(src->ip);

    TrafficResult r;
    std::vector<std::string> alerting; // sensors that raise an alert
    auto observe_zone = [&](const std::string& zone) {
        for (const auto& s : topo.sensors) {
            if (s.type == SensorType::ids_tap && s.where == zone) {
                r.observed_by.push_back(s.id);
                if (sig && s.signatures.contains(sig->sid)) alerting.push_back(s.id);
            }
        }
    };

    const auto& src_port = fabric_.port(src->switch_id, src->port_id);
    const auto& dst_port = fabric_.port(dst->switch_id, dst->port_id);
    r.throttled = src_port.rate_limit_kbps > 0 &&
                  optional_field<std::uint32_t>(body, "rate_kbps").value_or(0) > src_port.rate_limit_kbps;

    if (!src_port.up) {
        r.dropped_by = "port-down";
    } else {
        const bool vlan_ok = !(fabric_.isolated(src_port.vlan) || fabric_.isolated(dst_port.vlan)) ||
                             src_port.vlan == dst_port.vlan;
        const auto path = route(topo, src->zone, dst->zone);
        if (!vlan_ok) {
            // The frame only reaches the source segment.
            observe_zone(src->zone);
            r.dropped_by = "vlan-isolation";
        } else if (!path) {
            observe_zone(src->zone);
            r.dropped_by = "no-route";
        } else {
            observe_zone(path->zones.front());
            for (std::size_t i = 0; i < path->links.size() && r.dropped_by.empty(); ++i) {
                const auto& link = path->links[i];
                for (const auto& fw : topo.firewalls) {
                    if (std::find(fw.links.begin(), fw.links.end(), link) == fw.links.end()) continue;
                    ngfw::PacketContext pkt;
                    pkt.src = src->ip;
                    pkt.dst = dst->ip;
                    pkt.protocol = *ngfw::parse_protocol(required<std::string>(body, "protocol"));
                    pkt.application = optional_field<std::string>(body, "application").value_or("");
                    std::transform(pkt.application.begin(), pkt.application.end(), pkt.application.begin(),
                                   [](unsigned char c) { return std::tolower(c); });
                    if (pkt.protocol != ngfw::Protocol::icmp) {
                        pkt.src_port = optional_field<std::uint16_t>(body, "sport");
                        pkt.dst_port = optional_field<std::uint16_t>(body, "dport");
                    }
                    pkt.session_ref = engine_->session_for_ip(src->ip);
                    pkt.dst_name = optional_field<std::string>(body, "dst_name");
                    const auto verdict =
                        ngfw::match_packet(fabric_.firewall(fw.id).effective(), pkt, engine_->session_index(),
                                           resolver_, {scenario_.firewall_default, clock_.now(), false});
                    if (!r.firewall) r.firewall = verdict;
                    if (verdict.action == ngfw::Action::deny) {
                        r.dropped_by = "firewall:" + fw.id;
                        break;
                    }
                }
                if (!r.dropped_by.empty()) break;
                for (const auto& s : topo.sensors) {
                    if (s.type == SensorType::inline_ips && s.where == link) {
                        r.observed_by.push_back(s.id);
                        if (sig && s.signatures.contains(sig->sid)) {
                            alerting.push_back(s.id);
                            r.dropped_by = "ips:" + s.id;
                        }
                    }
                }
                if (!r.dropped_by.empty()) break;
                observe_zone(path->zones[i + 1]);
            }
            if (r.dropped_by.empty() && !dst_port.up) {
                r.dropped_by = "port-down";
            }
        }
    }
    r.delivered = r.dropped_by.empty();

    bool acted = false;
    std::string action_name;
    for (std::size_t i = 0; i < alerting.size(); ++i) {
        const auto line = alert_line(*src, *dst, body, *sig);
        r.alert_lines.push_back(line);
        r.alert_emitted = true;
        const auto evt = threat::parse_fast_alert(line, {scenario_.alert_year, engine_->dedup_window()});
        const auto out = engine_->handle_threat(evt);
        sync_commands();
        if (out.disposition == pdp::ThreatDisposition::applied && out.session_id && src_session_before &&
            *out.session_id == *src_session_before && out.action) {
            acted = true;
            action_name = std::string(threat::to_string(out.action->kind));
        }
    }
    if (sig) {
        if (r.dropped_by.starts_with("ips:") || r.dropped_by.starts_with("firewall:")) {
            r.contained = true;
            r.containing_action = r.dropped_by.starts_with("ips:") ? "inline-drop" : "firewall-deny";
            if (acted) r.containing_action += "+" + action_name;
        } else if (acted) {
            r.contained = true;
            r.containing_action = action_name;
        } else {
            r.contained = false;
        }
        auto& [c, t] = containment_[src->zone];
        ++t;
        if (*r.contained) ++c;
    }
    return r;
}

json Simulator::step(const ScriptEvent& ev)
{
    clock_.set(ev.at);
    const auto& b = ev.body;
    const auto& topo = scenario_.topology;
    json r{{"at", ev.at}, {"type", ev.type}};
    auto live_id = [&](const HostSpec& host) -> std::string {
        const auto s = host_session(host.name);
        if (!s) throw NotFound(fmt::format("host '{}' has no session", host.name));
        return s->id;
    };
    try {
        if (ev.type == "traffic") {
            r.update(json(traffic(b)));
        } else if (ev.type == "connect") {
            r.update(connect(*topo.host(required<std::string>(b, "host")), b));
        } else if (ev.type == "posture") {
            const auto* host = topo.host(required<std::string>(b, "host"));
            json doc{{"device", model::DeviceDescriptor{host->mac, host->device_class, host->managed}},
                     {"checks", required<json>(b, "checks")},
                     {"collected_at", ev.at}};
            const auto out = engine_->submit_posture(doc.get<posture::PostureReport>());
            r["transitions"] = out.transitions.size();
        } else if (ev.type == "scan") {
            const auto* host = topo.host(required<std::string>(b, "host"));
            json doc{{"mac", host->mac}, {"findings", b.value("findings", json::array())}, {"scanned_at", ev.at}};
            const auto out = engine_->submit_scan(doc.get<posture::ScanReport>());
            r["transitions"] = out.transitions.size();
        } else if (ev.type == "remediate") {
            const auto* host = topo.host(required<std::string>(b, "host"));
            const auto out = engine_->remediate(live_id(*host), required<std::string>(b, "check"));
            r["changed"] = out.changed;
            r["posture"] = posture::to_string(out.verdict.status);
        } else if (ev.type == "register_guest") {
            const auto* host = topo.host(required<std::string>(b, "host"));
            identity::GuestRegistration reg{required<std::string>(b, "name"),
                                            optional_field<std::string>(b, "email").value_or(""),
                                            optional_field<std::string>(b, "sponsor").value_or(""),
                                            ev.at + required<model::Millis>(b, "valid_for_ms")};
            const auto out = engine_->register_guest(reg);
            r["guest"] = out.credential.record.user_id;
            if (optional_field<bool>(b, "connect").value_or(true)) {
                sync_commands();
                r.update(connect(*host, b, out.credential.credential()));
            }
        } else if (ev.type == "admin") {
            const auto* host = topo.host(required<std::string>(b, "host"));
            const auto action = required<std::string>(b, "action");
            const auto reason = optional_field<std::string>(b, "reason").value_or("");
            const auto id = live_id(*host);
            if (action == "terminate") engine_->terminate(id, reason);
            if (action == "disable") engine_->disable(id, reason);
            if (action == "reenable") engine_->reenable(id);
            if (action == "reevaluate") engine_->reevaluate(id);
            r["session_id"] = id;
        } else if (ev.type == "alert") {
            const auto evt = threat::parse_fast_alert(required<std::string>(b, "line"),
                                                      {scenario_.alert_year, engine_->dedup_window()});
            const auto out = engine_->handle_threat(evt);
            r["disposition"] = pdp::to_string(out.disposition);
            if (out.session_id) r["session_id"] = *out.session_id;
        } else if (ev.type == "resolve") {
            const auto addrs = required<std::vector<model::Ipv4Address>>(b, "addresses");
            resolver_ = resolver_.update(required<std::string>(b, "fqdn"), {addrs.begin(), addrs.end()}, ev.at);
        } else if (ev.type == "policy") {
            const auto doc = required<json>(b, "document");
            const auto text = doc.is_string() ? doc.get<std::string>() : doc.dump();
            engine_->update_policy(*pdp::parse_policy_kind(required<std::string>(b, "kind")), text);
        } else {
            throw InvalidArgument(fmt::format("unknown event type '{}'", ev.type));
        }
    } catch (const InvalidArgument&) {
        throw;
    } catch (const Error& e) {
        r["error"] = e.what();
    }
    sync_commands();
    return r;
}

namespace {

json state_sequence(const pdp::Session& s)
{
    json out = json::array({"pending"});
    for (const auto& h : s.history) out.push_back(pdp::to_string(h.to));
    return out;
}

} // namespace

json Simulator::run()
{
    event_reports_.clear();
    containment_.clear();
    for (const auto& ev : scenario_.script) {
        event_reports_.push_back(step(ev));
    }

    json report;
    report["scenario"] = scenario_.name;
    report["events"] = event_reports_;
    json containment = json::object();
    for (const auto& [zone, ct] : containment_) {
        containment[zone] = {{"contained", ct.first},
                             {"total", ct.second},
                             {"ratio", fmt::format("{}/{}", ct.first, ct.second)}};
    }
    report["containment"] = containment;
    const auto sessions = engine_->sessions();
    report["sessions"] = sessions;
    const auto digest = engine_->session_digest();
    report["session_digest"] = digest;
    json commands = json::array();
    for (const auto& c : engine_->commands_since(0)) commands.push_back(describe(c));
    report["commands"] = commands;

    // Rebuild from the audit log alone.
    const auto records = engine_->audit_since(0);
    auto replay_dir = make_directory(scenario_);
    model::VirtualClock replay_clock(0);
    pdp::Engine replayed(scenario_.engine, *replay_dir, replay_clock);
    replayed.replay(records);
    const auto replay_digest = replayed.session_digest();
    report["replay"] = {{"records", records.size()}, {"digest", replay_digest}, {"match", replay_digest == digest}};

    json results = json::array();
    bool all = replay_digest == digest;
    for (std::size_t i = 0; i < scenario_.assertions.size(); ++i) {
        const auto& a = scenario_.assertions[i];
        const auto type = required<std::string>(a, "type");
        bool passed = false;
        json actual;
        auto event_report = [&]() -> const json& {
            const auto idx = required<std::size_t>(a, "event");
            if (idx >= event_reports_.size()) throw InvalidArgument(fmt::format("assertion {}: no event {}", i, idx));
            return event_reports_[idx];
        };
        if (type == "containment") {
            const auto zone = required<std::string>(a, "zone");
            const auto it = containment_.find(zone);
            const auto ct = it == containment_.end() ? std::pair<int, int>{0, 0} : it->second;
            actual = fmt::format("{}/{}", ct.first, ct.second);
            passed = ct.first == required<int>(a, "contained") && ct.second == required<int>(a, "total");
        } else if (type == "session_state") {
            const auto s = host_session(required<std::string>(a, "host"));
            actual = s ? json(pdp::to_string(s->state)) : json(nullptr);
            passed = s && pdp::to_string(s->state) == required<std::string>(a, "state");
        } else if (type == "state_sequence") {
            const auto s = host_session(required<std::string>(a, "host"));
            actual = s ? state_sequence(*s) : json::array();
            passed = actual == required<json>(a, "states");
        } else if (type == "delivered" || type == "alert_emitted" || type == "throttled" || type == "contained") {
            const auto& ev = event_report();
            actual = ev.value(type, json(nullptr));
            passed = actual == required<json>(a, "value");
        } else if (type == "observed_by") {
            const auto& ev = event_report();
            auto got = ev.value("observed_by", std::vector<std::string>{});
            auto want = required<std::vector<std::string>>(a, "sensors");
            std::sort(got.begin(), got.end());
            std::sort(want.begin(), want.end());
            actual = got;
            passed = got == want;
        } else if (type == "firewall") {
            const auto& ev = event_report();
            actual = ev.value("firewall", json(nullptr));
            passed = actual.is_object() && actual.at("action") == required<std::string>(a, "action") &&
                     (!a.contains("rule_id") || actual.at("rule_id") == a.at("rule_id"));
        } else if (type == "decision") {
            const auto& ev = event_report();
            actual = ev.value("verdict", json(nullptr));
            passed = actual == required<std::string>(a, "verdict") &&
                     (!a.contains("rule") || ev.value("rule", json(nullptr)) == a.at("rule"));
        } else if (type == "command") {
            const auto want = required<std::string>(a, "contains");
            const bool present = std::find(commands.begin(), commands.end(), want) != commands.end();
            const bool negate = optional_field<bool>(a, "absent").value_or(false);
            actual = present;
            passed = negate ? !present : present;
        } else if (type == "replay_match") {
            actual = replay_digest == digest;
            passed = replay_digest == digest;
        } else {
            throw InvalidArgument(fmt::format("assertion {}: unknown type '{}'", i, type));
        }
        results.push_back({{"index", i}, {"type", type}, {"passed", passed}, {"actual", actual}, {"expected", a}});
        all = all && passed;
    }
    report["assertions"] = results;
    report["passed"] = all;
    return report;
}

json run_scenario(const Scenario& scenario)
{
    Simulator sim(scenario);
    return sim.run();
}

} // namespace nac::enforce
