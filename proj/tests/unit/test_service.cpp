#include "doctest.h"

#include "service_fixture.hpp"

#include "httplib.h"
#include "nac/model/errors.hpp"
#include "nac/service/alert_tail.hpp"
#include "nac/service/config.hpp"
#include "nac/service/serial_queue.hpp"
#include "nac/service/server.hpp"
#include "nac/threat/fast_alert.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <thread>

using namespace nac;
using namespace nac::service;
using nlohmann::json;

namespace {

template <typename Pred>
bool eventually(Pred pred)
{
    for (int i = 0; i < 100; ++i) {
        if (pred()) return true;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    return pred();
}

void send_udp(int port, const std::string& text)
{
    const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ::sendto(fd, text.data(), text.size(), 0, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    ::close(fd);
}

json post(httplib::Client& c, const std::string& path, const json& body, int expect)
{
    const auto res = c.Post(path, body.dump(), "application/json");
    REQUIRE(res);
    CHECK_MESSAGE(res->status == expect, path << " " << res->body);
    return json::parse(res->body);
}

json get(httplib::Client& c, const std::string& path, int expect = 200)
{
    const auto res = c.Get(path);
    REQUIRE(res);
    CHECK_MESSAGE(res->status == expect, path << " " << res->body);
    return json::parse(res->body);
}

std::string alert_from(const std::string& src_ip, const std::string& message, model::Millis at)
{
    threat::ThreatEvent e;
    e.sig = {1, 2100001, 1};
    e.message = message;
    e.category = "Attempted Information Leak";
    e.priority = 2;
    e.protocol = threat::Proto::tcp;
    e.src = {model::Ipv4Address::parse(src_ip), 40000};
    e.dst = {model::Ipv4Address::parse("192.0.2.7"), 80};
    e.observed_at = at;
    return threat::format_fast_alert(e, 1970);
}

} // namespace

TEST_CASE("config file loading")
{
    const auto cfg = load_config(std::string(NAC_TEST_DATA) + "/service/config.json");
    CHECK(cfg.listen_host == "127.0.0.1");
    CHECK(cfg.listen_port == 8080);
    CHECK(cfg.syslog_port == 5514);
    CHECK(cfg.alert_year == 2012);
    CHECK(cfg.resolver_ttl_seconds == 3600);
    CHECK(std::filesystem::path(cfg.nac_policy_path).is_absolute());
    CHECK(std::filesystem::path(cfg.nac_policy_path).filename() == "nac.json");
    CHECK_FALSE(cfg.admin_token);
    CHECK_NOTHROW(cfg.validate());

    const auto base = json::parse(std::ifstream(std::string(NAC_TEST_DATA) + "/service/config.json"));
    auto bad = [&](const char* patch) {
        auto j = base;
        j.merge_patch(json::parse(patch));
        return parse_config(j, std::string(NAC_TEST_DATA) + "/service").validate();
    };
    CHECK_THROWS_AS(bad(R"({"listen": "localhost"})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"listen": "127.0.0.1:99999"})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"nac_policy": "missing.json"})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"firewall_default": "maybe"})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"dedup_window_ms": -1})"), ConfigError);
    CHECK_NOTHROW(bad(R"({"syslog_port": null})"));
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("serial queue runs jobs in order and rethrows")
{
    SerialQueue q;
    std::vector<int> order;
    std::vector<std::future<void>> fs;
    for (int i = 0; i < 50; ++i) fs.push_back(q.submit([&order, i] { order.push_back(i); }));
    for (auto& f : fs) f.get();
    std::vector<int> want(50);
    std::iota(want.begin(), want.end(), 0);
    CHECK(order == want);
    CHECK(q.run([] { return 7; }) == 7);
    CHECK_THROWS_AS(q.run([]() -> int { throw Conflict("busy"); }), Conflict);
    q.stop();
}

TEST_CASE("alert tail follows appends and truncation")
{
    fixture::ServiceDir dir("tail");
    const auto path = dir.file("alerts.log");
    std::ofstream(path) << "old line\n";
    std::vector<std::string> got;
    AlertTail tail(path, [&](std::string l) { got.push_back(std::move(l)); });
    tail.start(false);
    tail.stop();
    CHECK(tail.poll_once() == 0);
    {
        std::ofstream out(path, std::ios::app);
        out << "first\nsec";
    }
    CHECK(tail.poll_once() == 1);
    {
        std::ofstream out(path, std::ios::app);
        out << "ond\n";
    }
    CHECK(tail.poll_once() == 1);
    CHECK(got == std::vector<std::string>{"first", "second"});
    std::ofstream(path) << "x\n";
    CHECK(tail.poll_once() == 1);
    CHECK(got.back() == "x");
}

TEST_CASE("http api end to end")
{
    fixture::ServiceDir dir("http");
    model::VirtualClock clock(1000000);
    std::string audit_after;
    std::string digest;
    {
        Service svc(load_config(dir.config()), &clock);
        const int port = svc.start();
        httplib::Client c("127.0.0.1", port);

        CHECK(get(c, "/health")["status"] == "ok");

        auto a = post(c, "/access-requests", fixture::access_body("alice", "alice-pw", 1, true), 200);
        CHECK(a["decision"]["verdict"] == "grant");
        CHECK(a["decision"]["vlan"] == 10);
        const auto sid = a["session_id"].get<std::string>();
        const auto alice_ip = a["session"]["ip"].get<std::string>();
        CHECK(a["commands"].size() == 2);

        auto denied = post(c, "/access-requests", fixture::access_body("alice", "nope", 2, true), 200);
        CHECK(denied["decision"]["verdict"] == "deny");
        CHECK(denied["session_id"].is_null());

        auto q = post(c, "/access-requests", fixture::access_body("bob", "bob-pw", 3, true, 1), 200);
        CHECK(q["decision"]["rule"] == "posture-quarantine");
        const auto bob = q["session_id"].get<std::string>();

        // Admin conflicts, unknown sessions and malformed bodies.
        CHECK(post(c, "/sessions/" + sid + "/reenable", json::object(), 409)["error"] == "conflict");
        CHECK(post(c, "/sessions/s-77/terminate", json::object(), 404)["error"] == "not-found");
        get(c, "/sessions/s-77", 404);
        CHECK(post(c, "/access-requests", json{{"device", "?"}}, 400)["error"] == "invalid");
        const auto raw = c.Post("/access-requests", "{not json", "application/json");
        CHECK(raw->status == 400);

        // Reads append nothing.
        const auto before = get(c, "/audit")["next"].get<std::size_t>();
        get(c, "/sessions");
        get(c, "/sessions/" + sid);
        get(c, "/enforcement/commands");
        c.Get("/policies/firewall");
        CHECK(get(c, "/audit")["next"] == before);
        CHECK(get(c, "/audit?since=" + std::to_string(before))["records"].empty());
        get(c, "/audit?since=abc", 400);

        // Rejected firewall policy: 400 with line-numbered diagnostics, no state change.
        const auto bad = c.Put("/policies/firewall", "*  *  *  *  any  *  permit\nguest * * * tcpx * deny\n", "text/plain");
        REQUIRE(bad);
        CHECK(bad->status == 400);
        const auto diag = json::parse(bad->body)["diagnostics"];
        REQUIRE(diag.size() == 1);
        CHECK(diag[0]["line"] == 2);
        CHECK(diag[0]["field"] == "protocol");
        CHECK(get(c, "/audit")["next"] == before);

        const auto good = c.Put("/policies/firewall", "employee * * * tcp * permit\n* * * * any * deny\n", "text/plain");
        CHECK(good->status == 200);
        CHECK(c.Get("/policies/firewall")->body.find("employee") != std::string::npos);

        auto verdict = post(c, "/firewall/evaluate",
                            json{{"src", alice_ip}, {"dst", "192.0.2.9"}, {"protocol", "http"}, {"dst_port", 80}}, 200);
        CHECK(verdict["action"] == "permit");
        CHECK(verdict["rule_id"] == 1);

        // Remediation through the portal lifts the quarantine.
        auto fix = post(c, "/portal/remediate/" + bob + "/patches", json::object(), 200);
        CHECK(fix["changed"] == true);
        CHECK(fix["session"]["state"] == "active");
        CHECK(fix["session"]["vlan"] == 5);

        // Threat channels: HTTP line, UDP syslog, alert file.
        auto t = post(c, "/threat-events", json{{"line", alert_from(alice_ip, "ET SCAN probe", 5000)}}, 200);
        CHECK(t["disposition"] == "applied");
        CHECK(t["session_id"] == sid);
        CHECK(t["commands"][0]["type"] == "set_rate_limit");
        CHECK(post(c, "/threat-events", json{{"line", alert_from(alice_ip, "ET SCAN probe", 5000)}}, 200)["disposition"] ==
              "suppressed");
        CHECK(post(c, "/threat-events", json{{"line", "garbage"}}, 400).contains("column"));

        clock.advance(120000);
        send_udp(svc.syslog_port(), "<33>Jan 11 13:04:31 ids snort: " + alert_from(alice_ip, "ET SCAN again", 9000));
        CHECK(eventually([&] { return svc.alerts_ingested() == 1; }));
        send_udp(svc.syslog_port(), "<33>Jan 11 13:04:31 ids sshd: not an alert");
        CHECK(eventually([&] { return svc.alerts_rejected() == 1; }));

        clock.advance(120000);
        {
            std::ofstream out(dir.file("alerts.log"), std::ios::app);
            out << alert_from(alice_ip, "ET SCAN from file", 10000) << "\n";
        }
        CHECK(eventually([&] { return svc.alerts_ingested() == 2; }));

        auto reg = post(c, "/portal/register", json{{"name", "Gina"}, {"email", "g@example.org"}, {"sponsor", "alice"}},
                        200);
        CHECK(reg["expiry"] == clock.now() + 86400000);
        auto guest_req = fixture::access_body("", "", 4, true);
        guest_req["credential"] = reg["credential"];
        CHECK(post(c, "/access-requests", guest_req, 200)["decision"]["rule"] == "guest");

        CHECK(post(c, "/sessions/" + sid + "/disable", json{{"reason", "lost laptop"}}, 200)["session"]["state"] ==
              "disabled");
        CHECK(post(c, "/sessions/" + sid + "/reenable", json::object(), 200)["session"]["state"] == "pending");

        digest = get(c, "/sessions")["digest"].get<std::string>();
        svc.stop();
    }

    // Restart: the audit log rebuilds the same table.
    const auto records = pdp::read_audit_file(dir.file("audit.jsonl"));
    CHECK(records.back().kind == "audit.checkpoint");
    Service again(load_config(dir.config()), &clock);
    CHECK(again.engine().session_digest() == digest);
    CHECK(again.engine().audit_size() == records.size());
}

TEST_CASE("admin token guards admin and policy writes")
{
    fixture::ServiceDir dir("token");
    auto cfg = load_config(dir.config());
    cfg.admin_token = "s3cret";
    model::VirtualClock clock(0);
    Service svc(cfg, &clock);
    httplib::Client c("127.0.0.1", svc.start());
    const auto sid = post(c, "/access-requests", fixture::access_body("alice", "alice-pw", 1, true), 200)["session_id"]
                         .get<std::string>();
    CHECK(post(c, "/sessions/" + sid + "/terminate", json::object(), 401)["error"] == "unauthorized");
    CHECK(c.Put("/policies/threat", R"({"clauses": []})", "application/json")->status == 401);
    httplib::Headers auth{{"Authorization", "Bearer s3cret"}};
    const auto ok = c.Post("/sessions/" + sid + "/terminate", auth, "{}", "application/json");
    REQUIRE(ok);
    CHECK(ok->status == 200);
}

TEST_CASE("startup rejects broken inputs")
{
    fixture::ServiceDir dir("broken");
    std::ofstream(dir.file("nac.json")) << R"({"roles": [], "quarantine_vlan": 0, "registration_vlan": 98, "guest_vlan": 30})";
    CHECK_THROWS_AS(Service(load_config(dir.config())), ConfigError);

    fixture::ServiceDir tampered("tampered");
    {
        Service svc(load_config(tampered.config()));
        httplib::Client c("127.0.0.1", svc.start());
        post(c, "/access-requests", fixture::access_body("alice", "alice-pw", 1, true), 200);
        svc.stop();
    }
    // Drop one record from the middle of the log.
    std::ifstream in(tampered.file("audit.jsonl"));
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    in.close();
    REQUIRE(lines.size() > 2);
    lines.erase(lines.begin() + 1);
    std::ofstream out(tampered.file("audit.jsonl"));
    for (const auto& l : lines) out << l << "\n";
    out.close();
    CHECK_THROWS_AS(Service(load_config(tampered.config())), IntegrityError);
}
