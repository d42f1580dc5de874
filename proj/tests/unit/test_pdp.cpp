#include "doctest.h"

#include "nac/identity/directory.hpp"
#include "nac/model/errors.hpp"
#include "nac/pdp/decision.hpp"
#include "nac/pdp/nac_policy.hpp"
#include "nac/pdp/request.hpp"
#include "nac/pdp/session.hpp"
#include "nac/posture/store.hpp"

#include <algorithm>
#include <random>

using namespace nac;
using namespace nac::pdp;
using nlohmann::json;
using posture::PostureStatus;

namespace {

NacPolicy policy()
{
    return json::parse(R"({
        "roles": [{"role": "admin", "vlan": 5, "ruleset": "adm"}, {"role": "employee", "vlan": 10},
                  {"role": "printer", "vlan": 30}],
        "quarantine_vlan": 99, "registration_vlan": 98, "guest_vlan": 20,
        "device_profiles": [{"mac": "00:00:00:00:00:01", "role": "printer", "device_class": "printer"}]
    })").get<NacPolicy>();
}

model::UserIdentity user(std::string id, model::UserKind kind, std::set<std::string> roles)
{
    return {std::move(id), "", std::move(roles), kind};
}

posture::PostureVerdict verdict(PostureStatus s)
{
    posture::PostureVerdict v;
    v.status = s;
    if (s == PostureStatus::non_compliant) {
        v.failed = {"av"};
        v.remediation = {{"av", "av_installed", "install AV"}};
    }
    return v;
}

struct Expect {
    DecisionKind kind;
    DecisionRule rule;
    int vlan;
    Portal portal;
    std::string role;
};

} // namespace

// Every row of the decision table over every combination of inputs. The
// expected column is written out per case rather than computed.
TEST_CASE("decision table rows")
{
    const auto pol = policy();
    using K = DecisionKind;
    using R = DecisionRule;
    using identity::AuthFailure;
    const std::vector<identity::AuthResult> auths{
        user("alice", model::UserKind::employee, {"employee"}),
        user("root", model::UserKind::contractor, {"employee", "admin"}),
        user("g-1", model::UserKind::guest, {}),
        user("printer-1", model::UserKind::device_profile, {"printer"}),
        AuthFailure::unknown_user,
        AuthFailure::disabled,
        AuthFailure::bad_credential,
        AuthFailure::expired,
    };
    const PostureStatus statuses[] = {PostureStatus::compliant, PostureStatus::non_compliant, PostureStatus::unknown};
    // Rows: auth index × posture (compliant, non-compliant, unknown); allowlisting only matters for failures.
    const Expect q_posture{K::quarantine, R::posture_quarantine, 99, Portal::remediation, ""};
    const Expect table[8][3] = {
        {{K::grant, R::role_grant, 10, Portal::none, "employee"}, q_posture, q_posture},
        {{K::grant, R::role_grant, 5, Portal::none, "admin"}, q_posture, q_posture},
        {{K::grant, R::guest, 20, Portal::none, "guest"}, q_posture, q_posture},
        {{K::grant, R::device_profile, 30, Portal::none, "printer"},
         {K::quarantine, R::device_quarantine, 99, Portal::remediation, ""},
         {K::grant, R::device_profile, 30, Portal::none, "printer"}},
        {}, {}, {}, {},
    };
    for (std::size_t a = 0; a < auths.size(); ++a) {
        for (int p = 0; p < 3; ++p) {
            for (bool allow : {false, true}) {
                CAPTURE(a);
                CAPTURE(p);
                CAPTURE(allow);
                const auto d = decide({auths[a], allow, verdict(statuses[p])}, pol);
                Expect e;
                if (a < 4) {
                    e = table[a][p];
                } else if (a == 4 && !allow) {
                    e = {K::quarantine, R::registration, 98, Portal::registration, ""};
                } else {
                    e = {K::deny, R::auth_denied, 0, Portal::none, ""};
                }
                CHECK(d.kind == e.kind);
                CHECK(d.rule == e.rule);
                CHECK(d.vlan == e.vlan);
                CHECK(d.portal == e.portal);
                CHECK(d.role == e.role);
                if (e.rule == R::posture_quarantine || e.rule == R::device_quarantine) {
                    CHECK(d.remediation == verdict(statuses[p]).remediation);
                }
                if (e.kind == K::deny) {
                    CHECK(d.reason == identity::to_string(auths[a].failure()));
                }
            }
        }
    }
    CHECK(decide({user("x", model::UserKind::employee, {"employee"}), false, verdict(PostureStatus::unknown)}, pol)
              .reason == "posture-unknown");
    CHECK_THROWS_AS(decide({user("x", model::UserKind::employee, {"nobody"}), false, verdict(PostureStatus::compliant)},
                           pol),
                    ConfigError);
}

TEST_CASE("decide_access wires directory, allowlist and posture")
{
    identity::Directory dir(identity::seeded_random(3), 50);
    dir.add_user("alice", "pw", {"employee"});
    const auto pol = policy();
    const auto pp = json::parse(R"({"requirements": [
        {"id": "av", "check": "av_installed", "value": true}]})")
                        .get<posture::PosturePolicy>();
    posture::PostureStore store;
    const DecisionContext ctx{dir, pol, pp, store};

    auto req = json::parse(R"({
        "credential": {"method": "password", "principal": "alice", "secret": "pw"},
        "device": {"mac": "aa:aa:aa:aa:aa:01", "device_class": "laptop"},
        "location": {"switch": "sw1", "port": "1", "zone": "lan"},
        "posture": {"device": {"mac": "aa:aa:aa:aa:aa:01"}, "checks": {"av_installed": true}}
    })").get<AccessRequest>();
    auto d = decide_access(req, ctx, 42);
    CHECK(d.rule == DecisionRule::role_grant);
    CHECK(d.decided_at == 42);
    CHECK(d.inputs_digest == inputs_digest(req));

    req.posture.reset(); // nothing stored for this MAC
    CHECK(decide_access(req, ctx, 0).reason == "posture-unknown");

    req.credential = identity::Credential::mac_only(model::MacAddress::parse("00:00:00:00:00:01"));
    req.device.mac = model::MacAddress::parse("00:00:00:00:00:01");
    CHECK(decide_access(req, ctx, 0).rule == DecisionRule::device_profile);

    req.credential = identity::Credential::mac_only(model::MacAddress::parse("00:00:00:00:00:09"));
    req.device.mac = model::MacAddress::parse("00:00:00:00:00:09");
    CHECK(decide_access(req, ctx, 0).rule == DecisionRule::registration);

    req.credential = identity::Credential::password("alice", "wrong");
    CHECK(decide_access(req, ctx, 0).reason == "bad-credential");

    // An unknown principal with a password on an allowlisted device is denied.
    req.device.mac = model::MacAddress::parse("00:00:00:00:00:01");
    req.credential = identity::Credential::password("mallory", "x");
    CHECK(decide_access(req, ctx, 0).rule == DecisionRule::auth_denied);
}

TEST_CASE("lifecycle matches the transition table")
{
    using S = SessionState;
    const S all[] = {S::pending, S::active, S::quarantined, S::disabled, S::terminated};
    // Row = from, column = to, in the order above.
    const bool table[5][5] = {
        {false, true, true, false, true},
        {false, false, true, true, true},
        {false, true, false, true, true},
        {true, false, false, false, true},
        {false, false, false, false, false},
    };
    for (int f = 0; f < 5; ++f) {
        std::vector<S> targets;
        for (int t = 0; t < 5; ++t) {
            CAPTURE(f);
            CAPTURE(t);
            CHECK(legal_transition(all[f], all[t]) == table[f][t]);
            if (table[f][t]) targets.push_back(all[t]);
        }
        auto got = legal_targets(all[f]);
        std::sort(got.begin(), got.end());
        CHECK(got == targets);
        CHECK(parse_session_state(to_string(all[f])) == all[f]);
    }
    CHECK_FALSE(parse_session_state("zombie"));
}

TEST_CASE("nac policy validation")
{
    CHECK_NOTHROW(policy().validate());
    const auto round = json(policy()).get<NacPolicy>();
    CHECK(json(round) == json(policy()));
    CHECK(policy().binding("employee")->ruleset == "employee");
    CHECK(policy().binding("nobody") == nullptr);

    auto bad = [](const char* patch) {
        auto j = json(policy());
        j.merge_patch(json::parse(patch));
        return j;
    };
    CHECK_THROWS_AS(bad(R"({"quarantine_vlan": 0})").get<NacPolicy>(), InvalidArgument);
    CHECK_THROWS_AS(bad(R"({"guest_vlan": 4095})").get<NacPolicy>(), InvalidArgument);
    CHECK_THROWS_AS(bad(R"({"quarantine_vlan": 20})").get<NacPolicy>(), InvalidArgument);
    CHECK_THROWS_AS(bad(R"({"registration_vlan": 10})").get<NacPolicy>(), InvalidArgument);
    CHECK_THROWS_AS(bad(R"({"roles": [{"role": "a", "vlan": 1}, {"role": "a", "vlan": 2}]})").get<NacPolicy>(),
                    InvalidArgument);
    CHECK_THROWS_AS(bad(R"({"on_terminate": "explode"})").get<NacPolicy>(), InvalidArgument);
    CHECK(bad(R"({"on_terminate": "shut_port"})").get<NacPolicy>().on_terminate == TerminateAction::shut_port);
}

TEST_CASE("request redaction and digests")
{
    const auto j = json::parse(R"({
        "credential": {"method": "password", "principal": "alice", "secret": "hunter2"},
        "device": {"mac": "aa:aa:aa:aa:aa:01"},
        "location": {"switch": "sw1", "port": "1", "zone": "lan"}
    })");
    const auto req = j.get<AccessRequest>();
    const auto red = redacted_json(req);
    CHECK(red.dump().find("hunter2") == std::string::npos);
    CHECK(red["credential"]["secret"].get<std::string>().rfind("sha256:", 0) == 0);
    CHECK(inputs_digest(req) == inputs_digest(j.get<AccessRequest>()));
    auto other = req;
    other.credential.secret = "hunter3";
    CHECK(inputs_digest(other) != inputs_digest(req));

    auto mac_only = j;
    mac_only.erase("credential");
    CHECK(mac_only.get<AccessRequest>().credential.method == identity::AuthMethod::mac_only);

    auto wrong_dev = j;
    wrong_dev["posture"] = {{"device", {{"mac", "aa:aa:aa:aa:aa:02"}}}, {"checks", json::object()}};
    CHECK_THROWS_AS(wrong_dev.get<AccessRequest>(), InvalidArgument);
}

TEST_CASE("session json and table digest")
{
    std::vector<Session> sessions(3);
    std::mt19937 rng(5);
    for (int i = 0; i < 3; ++i) {
        auto& s = sessions[i];
        s.id = "s-" + std::to_string(i + 1);
        s.user = user("u" + std::to_string(i), model::UserKind::employee, {"employee"});
        s.authenticated = true;
        s.device.mac = model::MacAddress::parse("aa:aa:aa:aa:aa:0" + std::to_string(i));
        s.location.attachment = model::SwitchPort{"sw1", std::to_string(i)};
        s.ip = model::Ipv4Address(0x0a000001u + i);
        s.state = SessionState::active;
        s.vlan = 10;
        s.denied_apps = {"msn"};
        s.history = {{SessionState::pending, SessionState::active, 7u + i, 100, "role-grant"}};
        CHECK(json(s).get<Session>() == s);
    }
    CHECK(sessions[2].ordinal() == 3);
    const auto digest = session_table_digest(sessions);
    std::shuffle(sessions.begin(), sessions.end(), rng);
    CHECK(session_table_digest(sessions) == digest);
    sessions[0].vlan = 11;
    CHECK(session_table_digest(sessions) != digest);
}
