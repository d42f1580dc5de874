#include "doctest.h"

#include "nac/model/errors.hpp"
#include "nac/posture/posture.hpp"
#include "nac/posture/store.hpp"

#include <random>

#include <fmt/format.h>

using namespace nac;
using namespace nac::posture;
using nlohmann::json;

namespace {

const auto kMac = model::MacAddress::parse("00:16:3e:00:00:01");

PosturePolicy policy_of(const json& j) { return j.get<PosturePolicy>(); }

PosturePolicy standard_policy()
{
    return policy_of(json::parse(R"({
      "requirements": [
        {"id": "av", "check": "av_installed", "value": true},
        {"id": "sig", "check": "av_signature_age_days", "op": "<=", "value": 7},
        {"id": "patch", "check": "patch_level", "op": ">=", "value": 3},
        {"id": "fw", "check": "firewall_enabled", "value": true, "severity": "advisory"}
      ]})"));
}

PostureReport report(json checks)
{
    return json{{"device", {{"mac", kMac}}}, {"checks", std::move(checks)}}.get<PostureReport>();
}

} // namespace

TEST_CASE("posture verdicts")
{
    const auto pol = standard_policy();
    SUBCASE("compliant with an advisory failure")
    {
        const auto r = report({{"av_installed", true}, {"av_signature_age_days", 2}, {"patch_level", 4},
                               {"firewall_enabled", false}});
        const auto v = evaluate_posture(&r, pol);
        CHECK(v.status == PostureStatus::compliant);
        CHECK(v.failed == std::vector<std::string>{"fw"});
        CHECK(v.remediation.empty());
    }
    SUBCASE("missing check fails its requirements")
    {
        const auto r = report({{"av_installed", true}, {"patch_level", 3}});
        const auto v = evaluate_posture(&r, pol);
        CHECK(v.status == PostureStatus::non_compliant);
        CHECK(v.failed == std::vector<std::string>{"sig", "fw"});
        REQUIRE(v.remediation.size() == 1);
        CHECK(v.remediation[0].check_id == "av_signature_age_days");
    }
    SUBCASE("no report is unknown")
    {
        CHECK(evaluate_posture(nullptr, pol).status == PostureStatus::unknown);
    }
}

TEST_CASE("posture documents are validated")
{
    CHECK_THROWS_AS(policy_of(json::parse(R"({"requirements": []})")), InvalidArgument);
    CHECK_THROWS_AS(policy_of(json::parse(R"({"requirements": [{"check": "telepathy", "value": true}]})")),
                    InvalidArgument);
    CHECK_THROWS_AS(policy_of(json::parse(R"({"requirements": [{"check": "av_installed", "op": ">=", "value": true}]})")),
                    InvalidArgument);
    CHECK_THROWS_AS(policy_of(json::parse(R"({"requirements": [{"check": "patch_level", "value": true}]})")),
                    InvalidArgument);
    CHECK_THROWS_AS(report({{"patch_level", -1}}), InvalidArgument);
    CHECK_THROWS_AS(report({{"av_installed", 1}}), InvalidArgument);
    CHECK_THROWS_AS(report({{"unheard_of", true}}), InvalidArgument);
}

// Property: compliance holds exactly when every mandatory requirement is
// met. The oracle re-derives each comparison from the raw numbers.
TEST_CASE("verdict matches a direct evaluation oracle")
{
    std::mt19937_64 rng(17);
    const std::vector<std::string> counts{"av_signature_age_days", "patch_level"};
    const std::vector<std::string> bools{"av_installed", "firewall_enabled", "forbidden_process_present"};
    for (int iter = 0; iter < 500; ++iter) {
        json reqs = json::array();
        std::set<std::pair<std::string, bool>> used;
        struct Expect {
            std::string check;
            std::string op;
            json value;
            bool mandatory;
        };
        std::vector<Expect> spec;
        const int n = 1 + static_cast<int>(rng() % 4);
        for (int i = 0; i < n; ++i) {
            const bool mandatory = rng() % 3 != 0;
            Expect e;
            e.mandatory = mandatory;
            if (rng() % 2) {
                e.check = bools[rng() % bools.size()];
                e.op = "=";
                e.value = rng() % 2 == 0;
            } else {
                e.check = counts[rng() % counts.size()];
                e.op = std::vector<std::string>{"=", "<=", ">="}[rng() % 3];
                e.value = static_cast<int>(rng() % 6);
            }
            if (!used.insert({e.check, mandatory}).second) continue;
            reqs.push_back({{"id", fmt::format("r{}", i)}, {"check", e.check}, {"op", e.op}, {"value", e.value},
                            {"severity", mandatory ? "mandatory" : "advisory"}});
            spec.push_back(e);
        }
        const auto pol = policy_of(json{{"requirements", reqs}});
        json checks = json::object();
        for (const auto& b : bools) {
            if (rng() % 4) checks[b] = rng() % 2 == 0;
        }
        for (const auto& c : counts) {
            if (rng() % 4) checks[c] = static_cast<int>(rng() % 6);
        }
        const auto r = report(checks);
        bool ok = true;
        for (const auto& e : spec) {
            bool sat = false;
            if (checks.contains(e.check)) {
                const auto& v = checks[e.check];
                if (e.op == "=") sat = v == e.value;
                if (e.op == "<=") sat = v.get<int>() <= e.value.get<int>();
                if (e.op == ">=") sat = v.get<int>() >= e.value.get<int>();
            }
            if (e.mandatory && !sat) ok = false;
        }
        const auto v = evaluate_posture(&r, pol);
        CHECK(v.status == (ok ? PostureStatus::compliant : PostureStatus::non_compliant));
    }
}

TEST_CASE("store remediation sets a satisfying value")
{
    const auto pol = standard_policy();
    PostureStore store;
    CHECK_THROWS_AS(store.apply_remediation(kMac, "av_installed", pol), NotFound);
    store.put_report(report({{"av_installed", false}, {"av_signature_age_days", 30}, {"patch_level", 1}}));
    CHECK(store.verdict(kMac, pol).remediation.size() == 3);

    auto r = store.apply_remediation(kMac, "av", pol);
    CHECK(r.changed);
    CHECK(std::get<bool>(r.report.checks.at("av_installed")));
    CHECK_FALSE(store.apply_remediation(kMac, "av_installed", pol).changed);
    store.apply_remediation(kMac, "av_signature_age_days", pol);
    store.apply_remediation(kMac, "patch_level", pol);
    CHECK(store.verdict(kMac, pol).status == PostureStatus::compliant);
    CHECK_THROWS_AS(store.apply_remediation(kMac, "telepathy", pol), InvalidArgument);
}

TEST_CASE("critical scan findings flag the device until a clean scan")
{
    const auto pol = standard_policy();
    PostureStore store;
    store.put_report(report({{"av_installed", true}, {"av_signature_age_days", 0}, {"patch_level", 9}}));
    const auto scan = [](Millis at, double sev) {
        ScanReport s;
        s.mac = kMac;
        s.scanned_at = at;
        s.findings.push_back({"CVE-2012-0002", sev});
        return s;
    };
    auto d = store.ingest_scan(scan(10, 9.3), pol);
    CHECK(d.changed());
    CHECK(store.verdict(kMac, pol).status == PostureStatus::non_compliant);
    CHECK(store.verdict(kMac, pol).failed.back() == std::string(kCriticalVulnId));
    // Older scans are ignored.
    d = store.ingest_scan(scan(5, 1.0), pol);
    CHECK(d.stale);
    CHECK(store.critical_flag(kMac));
    // Just below the threshold clears the flag.
    d = store.ingest_scan(scan(20, 6.9), pol);
    CHECK(d.changed());
    CHECK(store.verdict(kMac, pol).status == PostureStatus::compliant);
    // Exactly at the threshold counts as critical.
    store.ingest_scan(scan(30, 7.0), pol);
    CHECK(store.critical_flag(kMac));
    CHECK(store.apply_remediation(kMac, std::string(kCriticalVulnId), pol).changed);
    CHECK_FALSE(store.critical_flag(kMac));
    CHECK_THROWS_AS(scan(40, 10.5).validate(), InvalidArgument);
}
