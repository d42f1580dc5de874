// Acceptance run: one PASS/FAIL line per primary criterion. Exit status is
// the number of failed criteria.

#include "bridges.hpp"
#include "service_fixture.hpp"

#include "httplib.h"
#include "nac/enforce/scenario.hpp"
#include "nac/enforce/simulator.hpp"
#include "nac/identity/directory.hpp"
#include "nac/ngfw/matcher.hpp"
#include "nac/pdp/engine.hpp"
#include "nac/service/config.hpp"
#include "nac/service/server.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <filesystem>
#include <functional>
#include <set>

using namespace nac;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Result {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

std::vector<std::string> scenario_files()
{
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(NAC_SCENARIOS)) {
        if (e.path().extension() == ".json") out.push_back(e.path().string());
    }
    for (const auto& e : std::filesystem::directory_iterator(std::string(NAC_TEST_DATA) + "/ctc")) {
        out.push_back(e.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> traces(const std::vector<enforce::EnforcementCommand>& cmds, std::size_t from)
{
    std::vector<std::string> v;
    for (std::size_t i = from; i < cmds.size(); ++i) v.push_back(enforce::describe(cmds[i].body));
    return v;
}

std::string join(const std::vector<std::string>& v)
{
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : " ") + s;
    return out;
}

// ---- 1. Figure 7 ----------------------------------------------------------

Result figure7()
{
    Result r;
    const auto t0 = Clock::now();
    enforce::Simulator sim(enforce::load_scenario_file(std::string(NAC_SCENARIOS) + "/dmz_figure7.json"));
    const auto report = sim.run();
    const double elapsed = ms_since(t0);

    const auto& c = report["containment"];
    const auto count = [&](const char* zone, const char* key) {
        return c.contains(zone) ? c[zone][key].get<int>() : -1;
    };
    r.require(count("dmz1", "contained") == 1 && count("dmz1", "total") == 1, "dmz1 not 1/1");
    r.require(count("dmz2", "contained") == 0 && count("dmz2", "total") == 1, "dmz2 not 0/1");

    const auto web = sim.host_session("dmz1-web");
    r.require(web && web->state == pdp::SessionState::terminated, "dmz1 attacker not terminated");
    // Terminated at the attack's own time, inside the step that carried it.
    r.require(web && !web->history.empty() && web->history.back().ts == 1000, "termination outside the attack step");
    const auto app = sim.host_session("dmz2-app");
    r.require(app && app->state == pdp::SessionState::active, "dmz2 attacker was acted on");
    r.require(report["replay"]["match"] == true, "replay mismatch");
    r.require(elapsed < 1000.0, fmt::format("runtime {:.1f} ms", elapsed));
    r.detail = fmt::format("dmz1 {}/{}, dmz2 {}/{}, {:.1f} ms (limit 1000 ms){}", count("dmz1", "contained"),
                           count("dmz1", "total"), count("dmz2", "contained"), count("dmz2", "total"), elapsed,
                           r.pass ? "" : "; " + r.detail);
    return r;
}

// ---- 2. guest iPad rule row ----------------------------------------------

Result guest_ipad_row()
{
    Result r;
    model::VirtualClock clock(1000);
    identity::Directory dir(identity::seeded_random(7), 50);
    pdp::EngineConfig cfg;
    cfg.nac_document = R"({"roles": [{"role": "employee", "vlan": 10}], "quarantine_vlan": 99,
                           "registration_vlan": 98, "guest_vlan": 30, "firewall_id": "fw1"})";
    cfg.posture_document = R"({"requirements": [{"check": "av_installed", "value": true}]})";
    cfg.firewall_document = "guest  ipad  *  www.msn.com  http  msn  deny\n"
                            "guest  *     *  *            any   *    permit\n"
                            "*      *     *  *            any   *    deny\n";
    pdp::Engine engine(cfg, dir, clock);
    const auto guest = engine.register_guest({"Gina", "g@example.org", "alice", clock.now() + 3600000});

    auto connect = [&](int host, model::DeviceClass cls) {
        pdp::AccessRequest req;
        req.credential = guest.credential.credential();
        req.device.mac = model::MacAddress::parse(fmt::format("00:16:3e:00:06:{:02x}", host));
        req.device.device_class = cls;
        req.location.attachment = model::SwitchPort{"sw-guest", std::to_string(host)};
        req.location.zone = model::Zone::guest;
        posture::PostureReport rep;
        rep.device = req.device;
        rep.checks["av_installed"] = true;
        req.posture = rep;
        const auto out = engine.request_access(req);
        return *engine.session(*out.session_id);
    };
    const auto ipad = connect(1, model::DeviceClass::ipad);
    const auto laptop = connect(2, model::DeviceClass::laptop);
    r.require(ipad.state == pdp::SessionState::active && ipad.vlan == 30, "guest iPad not granted");

    std::set<model::Ipv4Address> addrs;
    for (int i = 1; i <= 100; ++i) addrs.insert(model::Ipv4Address::parse(fmt::format("65.55.{}.{}", i / 50, i % 50 + 1)));
    json listing = json::array();
    for (const auto& a : addrs) listing.push_back(a.to_string());
    r.require(addrs.size() == 100, "snapshot is not 100 addresses");

    // Snapshot loaded up front, or built by a resolution step at run time.
    const auto loaded = ngfw::ResolverSnapshot::from_json({{"www.msn.com", listing}}, clock.now(), 3600);
    const auto resolved = ngfw::ResolverSnapshot().update("www.msn.com", addrs, clock.now());

    auto judge = [&](const pdp::Session& s, model::Ipv4Address dst, bool named, const ngfw::ResolverSnapshot& dns) {
        ngfw::PacketContext pkt;
        pkt.src = s.ip;
        pkt.dst = dst;
        pkt.src_port = 49152;
        pkt.dst_port = 80;
        pkt.protocol = ngfw::Protocol::http;
        pkt.application = "msn";
        pkt.session_ref = s.id;
        if (named) pkt.dst_name = "www.msn.com";
        return ngfw::match_packet(engine.firewall_rules(), pkt, engine.session_index(), dns,
                                  {ngfw::Action::deny, clock.now(), false});
    };
    int denied = 0, total = 0;
    for (const auto* dns : {&loaded, &resolved}) {
        for (bool named : {false, true}) {
            for (const auto& a : addrs) {
                const auto v = judge(ipad, a, named, *dns);
                ++total;
                if (v.action == ngfw::Action::deny && v.rule_id == 1u) ++denied;
            }
        }
    }
    r.require(denied == total, fmt::format("{} of {} flows not denied by rule 1", total - denied, total));
    // Controls: the row is specific to iPads and to the snapshot.
    r.require(judge(laptop, *addrs.begin(), true, loaded).rule_id == 2u, "laptop guest hit rule 1");
    r.require(judge(ipad, model::Ipv4Address::parse("198.51.100.1"), false, loaded).rule_id == 2u,
              "address outside the snapshot hit rule 1");
    r.detail = fmt::format("{}/{} flows deny by rule 1 (100 addresses x loaded/resolved x named/unnamed){}", denied,
                           total, r.pass ? "" : "; " + r.detail);
    return r;
}

// ---- 3. CTC action matrix -------------------------------------------------

struct CtcExpect {
    std::string fixture;
    std::vector<std::string> commands; // added by the first alert
    std::optional<pdp::SessionState> to;
    std::vector<pdp::SessionState> states; // full history of s-1 after the run
};

Result ctc_matrix()
{
    using S = pdp::SessionState;
    const std::vector<std::string> grant{"SetPortVlan(sw1,1,10)", "InstallRuleset(fw1,employee,s-1,0 rules)"};
    const std::vector<CtcExpect> cases{
        {"quarantine", {"SetPortVlan(sw1,1,99)", "InstallRuleset(fw1,quarantine,s-1,1 rules)"}, S::quarantined,
         {S::pending, S::active, S::quarantined}},
        {"role_change", {"InstallRuleset(fw1,employee,s-1,2 rules)"}, std::nullopt, {S::pending, S::active}},
        {"terminate", {"SetPortVlan(sw1,1,99)", "RemoveRuleset(fw1,employee,s-1)"}, S::terminated,
         {S::pending, S::active, S::terminated}},
        {"disable", {"SetPortVlan(sw1,1,99)", "RemoveRuleset(fw1,employee,s-1)"}, S::disabled,
         {S::pending, S::active, S::disabled, S::pending, S::active}},
        {"rate_limit", {"SetRateLimit(sw1,1,512)"}, std::nullopt, {S::pending, S::active}},
    };
    Result r;
    int ok = 0;
    for (const auto& c : cases) {
        Result one;
        enforce::Simulator sim(enforce::load_scenario_file(fmt::format("{}/ctc/{}.json", NAC_TEST_DATA, c.fixture)));
        auto& engine = sim.engine();
        int alerts = 0;
        for (const auto& ev : sim.scenario().script) {
            const auto cmds_before = engine.commands_since(0).size();
            const auto s_before = engine.session("s-1");
            const auto hist_before = s_before ? s_before->history.size() : 0;
            sim.clock().set(std::max(sim.clock().now(), ev.at));
            const auto rep = sim.step(ev);
            if (ev.type != "alert") continue;
            ++alerts;
            const auto added = traces(engine.commands_since(0), cmds_before);
            const auto s = *engine.session("s-1");
            const auto new_hist = s.history.size() - hist_before;
            if (alerts == 1) {
                one.require(rep.value("disposition", "") == "applied", c.fixture + ": first alert not applied");
                one.require(added == c.commands, c.fixture + ": trace [" + join(added) + "]");
                if (c.to) {
                    one.require(new_hist == 1 && s.history.back().to == *c.to, c.fixture + ": wrong transition");
                } else {
                    one.require(new_hist == 0, c.fixture + ": unexpected transition");
                }
            } else if (alerts == 2) {
                // Same line inside the dedup window.
                one.require(rep.value("disposition", "") == "suppressed", c.fixture + ": resend not suppressed");
                one.require(added.empty() && new_hist == 0, c.fixture + ": resend changed state");
            }
        }
        std::vector<S> seen{S::pending};
        const auto final_state = *engine.session("s-1");
        for (const auto& h : final_state.history) seen.push_back(h.to);
        one.require(seen == c.states, c.fixture + ": state sequence");
        auto all = grant;
        all.insert(all.end(), c.commands.begin(), c.commands.end());
        if (c.fixture == "disable") all.insert(all.end(), grant.begin(), grant.end());
        one.require(traces(engine.commands_since(0), 0) == all,
                    c.fixture + ": full trace [" + join(traces(engine.commands_since(0), 0)) + "]");
        one.require(alerts >= 2, c.fixture + ": fixture lacks the resend");
        if (one.pass) ++ok;
        r.require(one.pass, one.detail);
    }
    r.detail = fmt::format("{}/5 fixtures exact, resend idempotent{}", ok, r.pass ? "" : "; " + r.detail);
    return r;
}

// ---- 4. remediation loop over HTTP ----------------------------------------

Result remediation_loop()
{
    Result r;
    spdlog::set_level(spdlog::level::warn);
    fixture::ServiceDir dir("acceptance");
    model::VirtualClock clock(5000);
    service::Service svc(service::load_config(dir.config()), &clock);
    httplib::Client c("127.0.0.1", svc.start());

    auto post = [&](const std::string& path, const json& body) {
        const auto res = c.Post(path, body.dump(), "application/json");
        return res ? std::make_pair(res->status, json::parse(res->body)) : std::make_pair(0, json());
    };
    const auto [st1, opened] = post("/access-requests", fixture::access_body("alice", "alice-pw", 9, false));
    r.require(st1 == 200 && opened["session"]["state"] == "quarantined", "not quarantined on a failing report");
    const auto sid = opened.value("session_id", std::string("?"));
    const auto remediation = opened["decision"].value("remediation", json::array());
    r.require(remediation.size() == 1 && remediation[0]["check_id"] == "av_installed", "remediation list");

    clock.advance(30000);
    const auto [st2, fixed] = post("/portal/remediate/" + sid + "/av_installed", json::object());
    r.require(st2 == 200 && fixed["session"]["state"] == "active", "not active after remediation");

    const auto audit = c.Get("/audit");
    std::vector<std::string> seq;
    if (audit && audit->status == 200) {
        const auto body = json::parse(audit->body);
        for (const auto& rec : body["records"]) {
            if (rec["kind"] == "session.transition" && rec["payload"]["session_id"] == sid) {
                seq.push_back(rec["payload"]["from"].get<std::string>() + ">" + rec["payload"]["to"].get<std::string>());
            }
        }
    }
    const std::vector<std::string> want{"pending>quarantined", "quarantined>active"};
    r.require(seq == want, "audit transitions [" + join(seq) + "]");
    svc.stop();
    r.detail = fmt::format("audit sequence [{}] via live HTTP{}", join(seq), r.pass ? "" : "; " + r.detail);
    return r;
}

// ---- 5. oracle suites -----------------------------------------------------

Result oracle_suites()
{
    Result r;
    const auto t0 = Clock::now();
    const auto fw = bridge::firewall_suite(1000, 1000);
    const auto corr = bridge::correlation_suite(500, 500);
    const auto vis = bridge::visibility_suite(600, 40);
    const double elapsed = ms_since(t0);
    r.require(fw.mismatches == 0, fmt::format("{} firewall mismatches", fw.mismatches));
    r.require(corr.checked == 500 && corr.mismatches == 0, fmt::format("{} correlation mismatches", corr.mismatches));
    r.require(vis.mismatches == 0, fmt::format("{} visibility mismatches", vis.mismatches));
    r.require(elapsed < 30000.0, fmt::format("runtime {:.0f} ms", elapsed));
    r.detail = fmt::format("firewall 1000 instances/{} packets mismatches={}, correlation {}/{} ok, visibility {} flows "
                           "mismatches={}, {:.0f} ms (limit 30000 ms){}",
                           fw.checked, fw.mismatches, corr.checked - corr.mismatches, corr.checked, vis.checked,
                           vis.mismatches, elapsed, r.pass ? "" : "; " + r.detail);
    return r;
}

// ---- 6. replay determinism ------------------------------------------------

Result replay_determinism()
{
    Result r;
    int scenarios = 0, matched = 0;
    for (const auto& path : scenario_files()) {
        ++scenarios;
        const auto report = enforce::run_scenario(enforce::load_scenario_file(path));
        if (report["replay"]["match"] == true) ++matched;
        else r.require(false, std::filesystem::path(path).filename().string());
    }
    int histories = 0, reproduced = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        ++histories;
        if (bridge::replays_identically(bridge::random_history(seed, 80))) ++reproduced;
    }
    r.require(reproduced == histories, fmt::format("{} random histories diverged", histories - reproduced));
    r.detail = fmt::format("scenarios {}/{}, random histories {}/{}{}", matched, scenarios, reproduced, histories,
                           r.pass ? "" : "; " + r.detail);
    return r;
}

// ---- 7. decision-table coverage -------------------------------------------

Result decision_coverage()
{
    using pdp::DecisionRule;
    Result r;
    model::VirtualClock clock(1000);
    identity::Directory dir(identity::seeded_random(9), 50);
    dir.add_user("alice", "alice-pw", {"employee"});
    identity::DirectoryRecord gone;
    gone.user_id = "gone";
    gone.secret_verifier = identity::make_verifier("x", identity::seeded_random(1), 50);
    gone.roles = {"employee"};
    gone.enabled = false;
    dir.add(gone);
    pdp::EngineConfig cfg;
    cfg.nac_document = R"({"roles": [{"role": "employee", "vlan": 10}, {"role": "printer", "vlan": 40}],
        "quarantine_vlan": 99, "registration_vlan": 98, "guest_vlan": 30,
        "device_profiles": [{"mac": "00:16:3e:00:04:01", "role": "printer", "device_class": "printer"},
                            {"mac": "00:16:3e:00:04:02", "role": "printer", "device_class": "printer"}]})";
    cfg.posture_document = R"({"requirements": [{"check": "av_installed", "value": true}]})";
    cfg.firewall_document = "*  *  *  *  any  *  permit\n";
    pdp::Engine engine(cfg, dir, clock);
    const auto guest = engine.register_guest({"Gina", "", "", clock.now() + 3600000});

    int host = 0;
    auto request = [&](identity::Credential cred, std::string mac, std::optional<bool> av) {
        pdp::AccessRequest req;
        req.credential = std::move(cred);
        req.device.mac = model::MacAddress::parse(mac);
        req.location.attachment = model::SwitchPort{"sw1", std::to_string(++host)};
        if (av) {
            posture::PostureReport rep;
            rep.device = req.device;
            rep.checks["av_installed"] = *av;
            req.posture = rep;
        }
        return engine.request_access(req).decision;
    };
    const auto mac_only = [](const char* mac) { return identity::Credential::mac_only(model::MacAddress::parse(mac)); };

    // A failing stored report for the second printer.
    posture::PostureReport bad;
    bad.device.mac = model::MacAddress::parse("00:16:3e:00:04:02");
    bad.checks["av_installed"] = false;
    engine.submit_posture(bad);

    struct Row {
        const char* name;
        pdp::PolicyDecision d;
        DecisionRule rule;
        pdp::DecisionKind kind;
        int vlan;
        std::string reason;
    };
    using K = pdp::DecisionKind;
    const std::vector<Row> rows{
        {"unknown user -> registration portal", request(mac_only("00:16:3e:00:09:01"), "00:16:3e:00:09:01", {}),
         DecisionRule::registration, K::quarantine, 98, "unknown-user"},
        {"bad password", request(identity::Credential::password("alice", "nope"), "00:16:3e:00:01:01", true),
         DecisionRule::auth_denied, K::deny, 0, "bad-credential"},
        {"disabled account", request(identity::Credential::password("gone", "x"), "00:16:3e:00:01:02", true),
         DecisionRule::auth_denied, K::deny, 0, "disabled"},
        {"printer device profile", request(mac_only("00:16:3e:00:04:01"), "00:16:3e:00:04:01", {}),
         DecisionRule::device_profile, K::grant, 40, ""},
        {"printer with failing posture", request(mac_only("00:16:3e:00:04:02"), "00:16:3e:00:04:02", {}),
         DecisionRule::device_quarantine, K::quarantine, 99, "posture-non-compliant"},
        {"posture unknown", request(identity::Credential::password("alice", "alice-pw"), "00:16:3e:00:01:03", {}),
         DecisionRule::posture_quarantine, K::quarantine, 99, "posture-unknown"},
        {"posture non-compliant", request(identity::Credential::password("alice", "alice-pw"), "00:16:3e:00:01:04", false),
         DecisionRule::posture_quarantine, K::quarantine, 99, "posture-non-compliant"},
        {"guest", request(guest.credential.credential(), "00:16:3e:00:06:01", true), DecisionRule::guest, K::grant, 30,
         ""},
        {"employee role", request(identity::Credential::password("alice", "alice-pw"), "00:16:3e:00:01:05", true),
         DecisionRule::role_grant, K::grant, 10, ""},
    };
    std::set<DecisionRule> covered;
    for (const auto& row : rows) {
        const bool ok = row.d.rule == row.rule && row.d.kind == row.kind && row.d.vlan == row.vlan &&
                        (row.reason.empty() || row.d.reason == row.reason);
        r.require(ok, fmt::format("{}: got {} {} vlan {} '{}'", row.name, pdp::to_string(row.d.kind),
                                  pdp::to_string(row.d.rule), row.d.vlan, row.d.reason));
        if (ok) covered.insert(row.rule);
    }
    r.require(covered.size() == 7, fmt::format("{} of 7 rows covered", covered.size()));
    r.detail = fmt::format("{}/7 rows, {} cases{}", covered.size(), rows.size(), r.pass ? "" : "; " + r.detail);
    return r;
}

} // namespace

int main()
{
    spdlog::set_level(spdlog::level::warn);
    const std::vector<std::pair<std::string, std::function<Result()>>> criteria{
        {"figure7-containment", figure7},
        {"guest-ipad-rule-row", guest_ipad_row},
        {"ctc-action-matrix", ctc_matrix},
        {"remediation-loop", remediation_loop},
        {"oracle-suites", oracle_suites},
        {"replay-determinism", replay_determinism},
        {"decision-table-coverage", decision_coverage},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Result r;
        try {
            r = fn();
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = fmt::format("threw: {}", e.what());
        }
        if (!r.pass) ++failed;
        fmt::print("{} {}: {}\n", r.pass ? "PASS" : "FAIL", name, r.detail);
    }
    fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
    return failed;
}
