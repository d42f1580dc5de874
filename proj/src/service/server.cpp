#include "nac/service/server.hpp"

#include "httplib.h"
#include "json.hpp"
#include "nac/model/errors.hpp"
#include "nac/model/json_util.hpp"
#include "nac/ngfw/matcher.hpp"
#include "nac/threat/fast_alert.hpp"

#include <filesystem>
#include <fstream>

#include <spdlog/spdlog.h>

namespace nac::service {

using nlohmann::json;

namespace {

json transitions_json(const std::vector<pdp::TransitionInfo>& ts)
{
    json out = json::array();
    for (const auto& t : ts) {
        out.push_back({{"session_id", t.session_id},
                       {"from", pdp::to_string(t.from)},
                       {"to", pdp::to_string(t.to)},
                       {"reason", t.reason},
                       {"seq", t.seq}});
    }
    return out;
}

json outcome_json(const pdp::Outcome& o)
{
    return json{{"records", o.records.size()}, {"commands", o.commands}, {"transitions", transitions_json(o.transitions)}};
}

void send(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void fail(httplib::Response& res, int status, std::string_view type, const std::string& message,
          json extra = json::object())
{
    extra["error"] = type;
    extra["message"] = message;
    send(res, status, extra);
}

/// Maps library errors onto status classes.
template <typename F>
void guarded(httplib::Response& res, F&& fn)
{
    try {
        fn();
    } catch (const ngfw::RuleParseError& e) {
        json diags = json::array();
        for (const auto& d : e.diagnostics()) {
            diags.push_back({{"line", d.line}, {"field", d.field}, {"message", d.message}});
        }
        fail(res, 400, "invalid", e.what(), {{"diagnostics", diags}});
    } catch (const threat::AlertParseError& e) {
        fail(res, 400, "invalid", e.what(), {{"column", e.column()}});
    } catch (const InvalidArgument& e) {
        fail(res, 400, "invalid", e.what());
    } catch (const NotFound& e) {
        fail(res, 404, "not-found", e.what());
    } catch (const Conflict& e) {
        fail(res, 409, "conflict", e.what());
    } catch (const ConfigError& e) {
        fail(res, 500, "config", e.what());
    } catch (const IntegrityError& e) {
        fail(res, 500, "integrity", e.what());
    } catch (const json::exception& e) {
        fail(res, 400, "invalid", e.what());
    }
}

json body_of(const httplib::Request& req)
{
    if (req.body.empty()) {
        return json::object();
    }
    return model::parse_json(req.body);
}

} // namespace

pdp::EngineConfig engine_config(const ServiceConfig& c)
{
    pdp::EngineConfig e;
    e.nac_document = read_file(c.nac_policy_path);
    e.posture_document = read_file(c.posture_policy_path);
    e.threat_document = read_file(c.threat_policy_path);
    e.firewall_document = read_file(c.firewall_rules_path);
    e.dedup_window = c.dedup_window;
    return e;
}

Service::Service(ServiceConfig config, const model::Clock* clock) : config_(std::move(config))
{
    config_.validate();
    if (!clock) {
        own_clock_ = std::make_unique<model::SystemClock>();
        clock = own_clock_.get();
    }
    clock_ = clock;
    directory_ = std::make_unique<identity::Directory>();
    {
        std::ifstream in(config_.directory_path);
        directory_->load_jsonl(in);
    }
    try {
        engine_ = std::make_unique<pdp::Engine>(engine_config(config_), *directory_, *clock_);
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    resolver_ = ngfw::ResolverSnapshot::from_json(model::parse_json(read_file(config_.resolver_path)),
                                                  clock_->now(), config_.resolver_ttl_seconds);
    std::error_code ec;
    if (std::filesystem::exists(config_.audit_log_path, ec) && std::filesystem::file_size(config_.audit_log_path) > 0) {
        const auto records = pdp::read_audit_file(config_.audit_log_path);
        engine_->replay(records);
        spdlog::info("replayed {} audit records, {} sessions", records.size(), engine_->sessions().size());
    }
    sink_ = std::make_unique<pdp::JsonlAuditSink>(config_.audit_log_path);
    engine_->set_sink(sink_.get());
    http_ = std::make_unique<httplib::Server>();
    routes();
}

Service::~Service() { stop(); }

int Service::syslog_port() const { return syslog_ ? syslog_->port() : 0; }

void Service::ingest_line(const std::string& text, bool syslog)
{
    try {
        const threat::AlertParseOptions opts{config_.alert_year, engine_->dedup_window()};
        const auto evt = syslog ? threat::parse_syslog_alert(text, clock_->now(), opts)
                                : threat::parse_fast_alert(text, opts);
        const auto out = queue_.run([&] { return engine_->handle_threat(evt); });
        ++alerts_ok_;
        spdlog::info("alert {}:{}:{} -> {}", evt.sig.gid, evt.sig.sid, evt.sig.rev, pdp::to_string(out.disposition));
    } catch (const Error& e) {
        ++alerts_bad_;
        spdlog::warn("rejected alert: {}", e.what());
    }
}

int Service::start()
{
    if (config_.syslog_port) {
        syslog_ = std::make_unique<SyslogListener>(config_.listen_host, *config_.syslog_port,
                                                   [this](std::string d) { ingest_line(d, true); });
        syslog_->start();
        spdlog::info("syslog listening on udp {}:{}", config_.listen_host, syslog_->port());
    }
    if (config_.alert_file) {
        tail_ = std::make_unique<AlertTail>(*config_.alert_file, [this](std::string l) { ingest_line(l, false); });
        tail_->start();
    }
    if (config_.listen_port == 0) {
        http_port_ = http_->bind_to_any_port(config_.listen_host);
    } else {
        http_port_ = http_->bind_to_port(config_.listen_host, config_.listen_port) ? config_.listen_port : -1;
    }
    if (http_port_ < 0) {
        throw ConfigError(fmt::format("cannot bind {}:{}", config_.listen_host, config_.listen_port));
    }
    http_thread_ = std::thread([this] { http_->listen_after_bind(); });
    http_->wait_until_ready();
    spdlog::info("http listening on {}:{}", config_.listen_host, http_port_);
    return http_port_;
}

void Service::wait()
{
    while (!stopped_) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
}

void Service::stop()
{
    std::lock_guard lock(stop_mu_);
    if (stopped_.exchange(true)) {
        return;
    }
    if (tail_) tail_->stop();
    if (syslog_) syslog_->stop();
    if (http_) http_->stop();
    if (http_thread_.joinable()) http_thread_.join();
    try {
        queue_.run([&] { return engine_->checkpoint(); });
    } catch (const std::exception& e) {
        spdlog::warn("checkpoint failed: {}", e.what());
    }
    queue_.stop();
    engine_->set_sink(nullptr);
    sink_.reset();
}

void Service::routes()
{
    auto& s = *http_;
    auto admin = [this](const httplib::Request& req, httplib::Response& res) {
        if (!config_.admin_token) return true;
        if (req.get_header_value("Authorization") == "Bearer " + *config_.admin_token) return true;
        fail(res, 401, "unauthorized", "admin token required");
        return false;
    };

    s.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
        send(res, 200,
             {{"status", "ok"},
              {"sessions", engine_->sessions().size()},
              {"audit_records", engine_->audit_size()},
              {"alerts_ingested", alerts_ok_.load()},
              {"alerts_rejected", alerts_bad_.load()}});
    });

    s.Post("/access-requests", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto ar = body_of(req).get<pdp::AccessRequest>();
            const auto out = queue_.run([&] { return engine_->request_access(ar); });
            json body = outcome_json(out);
            body["decision"] = out.decision;
            body["session_id"] = out.session_id ? json(*out.session_id) : json(nullptr);
            if (out.session_id) body["session"] = *engine_->session(*out.session_id);
            send(res, 200, body);
        });
    });

    s.Get("/sessions", [this](const httplib::Request&, httplib::Response& res) {
        send(res, 200, json{{"sessions", engine_->sessions()}, {"digest", engine_->session_digest()}});
    });

    s.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto s = engine_->session(req.matches[1].str());
        if (!s) {
            fail(res, 404, "not-found", fmt::format("unknown session '{}'", req.matches[1].str()));
            return;
        }
        send(res, 200, *s);
    });

    s.Post(R"(/sessions/([^/]+)/(terminate|disable|reenable|reevaluate))",
           [this, admin](const httplib::Request& req, httplib::Response& res) {
               if (!admin(req, res)) return;
               guarded(res, [&] {
                   const auto id = req.matches[1].str();
                   const auto action = req.matches[2].str();
                   const auto b = body_of(req);
                   const auto reason = model::optional_field<std::string>(b, "reason").value_or("admin");
                   const auto who = model::optional_field<std::string>(b, "admin").value_or("admin");
                   json body;
                   if (action == "terminate") {
                       body = outcome_json(queue_.run([&] { return engine_->terminate(id, reason, who); }));
                   } else if (action == "disable") {
                       body = outcome_json(queue_.run([&] { return engine_->disable(id, reason, who); }));
                   } else if (action == "reenable") {
                       body = outcome_json(queue_.run([&] { return engine_->reenable(id, who); }));
                   } else {
                       const auto out = queue_.run([&] { return engine_->reevaluate(id, who); });
                       body = outcome_json(out);
                       if (out.decision) body["decision"] = *out.decision;
                   }
                   body["session"] = *engine_->session(id);
                   send(res, 200, body);
               });
           });

    s.Post("/threat-events", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto b = body_of(req);
            const threat::AlertParseOptions opts{config_.alert_year, engine_->dedup_window()};
            threat::ThreatEvent evt;
            if (const auto line = model::optional_field<std::string>(b, "line")) {
                evt = threat::parse_fast_alert(*line, opts);
            } else if (const auto dg = model::optional_field<std::string>(b, "syslog")) {
                evt = threat::parse_syslog_alert(*dg, clock_->now(), opts);
            } else {
                evt = threat::threat_event_from_json(b, engine_->dedup_window());
            }
            const auto out = queue_.run([&] { return engine_->handle_threat(evt); });
            json body = outcome_json(out);
            body["event"] = evt;
            body["disposition"] = pdp::to_string(out.disposition);
            body["session_id"] = out.session_id ? json(*out.session_id) : json(nullptr);
            body["action"] = out.action ? json(*out.action) : json(nullptr);
            send(res, 200, body);
        });
    });

    s.Post("/posture-reports", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto b = body_of(req);
            if (!b.contains("collected_at")) b["collected_at"] = clock_->now();
            const auto report = b.get<posture::PostureReport>();
            const auto out = queue_.run([&] { return engine_->submit_posture(report); });
            json body = outcome_json(out);
            body["verdict"] = engine_->posture_verdict(report.device.mac);
            send(res, 200, body);
        });
    });

    s.Post("/scan-reports", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto b = body_of(req);
            if (!b.contains("scanned_at")) b["scanned_at"] = clock_->now();
            const auto scan = b.get<posture::ScanReport>();
            const auto out = queue_.run([&] { return engine_->submit_scan(scan); });
            json body = outcome_json(out);
            body["verdict"] = engine_->posture_verdict(scan.mac);
            send(res, 200, body);
        });
    });

    s.Get(R"(/policies/(firewall|threat|posture|nac))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto kind = *pdp::parse_policy_kind(req.matches[1].str());
        res.status = 200;
        res.set_content(engine_->policy_document(kind),
                        kind == pdp::PolicyKind::firewall ? "text/plain" : "application/json");
    });

    s.Put(R"(/policies/(firewall|threat|posture|nac))",
          [this, admin](const httplib::Request& req, httplib::Response& res) {
              if (!admin(req, res)) return;
              guarded(res, [&] {
                  const auto kind = *pdp::parse_policy_kind(req.matches[1].str());
                  const auto out = queue_.run([&] { return engine_->update_policy(kind, req.body); });
                  json body = outcome_json(out);
                  body["applied"] = true;
                  send(res, 200, body);
              });
          });

    s.Get("/audit", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            std::size_t since = 0;
            if (req.has_param("since")) {
                const auto v = req.get_param_value("since");
                try {
                    since = std::stoull(v);
                } catch (const std::exception&) {
                    throw InvalidArgument(fmt::format("since: not a number '{}'", v));
                }
            }
            const auto records = engine_->audit_since(since);
            send(res, 200, json{{"records", records}, {"next", since + records.size()}});
        });
    });

    s.Get("/enforcement/commands", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            std::uint64_t since = 0;
            if (req.has_param("since")) since = std::stoull(req.get_param_value("since"));
            send(res, 200, json{{"commands", engine_->commands_since(since)}});
        });
    });

    s.Post("/firewall/evaluate", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto pkt = body_of(req).get<ngfw::PacketContext>();
            if (!pkt.session_ref) pkt.session_ref = engine_->session_for_ip(pkt.src);
            std::lock_guard lock(resolver_mu_);
            const auto v = ngfw::match_packet(engine_->firewall_rules(), pkt, engine_->session_index(), resolver_,
                                              {config_.firewall_default, clock_->now(), false});
            send(res, 200, v);
        });
    });

    s.Post("/portal/register", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto b = body_of(req);
            if (!b.contains("expiry")) {
                b["expiry"] = clock_->now() + model::optional_field<model::Millis>(b, "valid_for_ms").value_or(86400000);
            }
            const auto reg = b.get<identity::GuestRegistration>();
            const auto out = queue_.run([&] { return engine_->register_guest(reg); });
            json body = outcome_json(out);
            body["user_id"] = out.credential.record.user_id;
            body["token"] = out.credential.token;
            body["expiry"] = out.credential.record.expiry;
            body["credential"] = out.credential.credential();
            send(res, 200, body);
        });
    });

    s.Post(R"(/portal/remediate/([^/]+)/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto id = req.matches[1].str();
            const auto check = req.matches[2].str();
            const auto out = queue_.run([&] { return engine_->remediate(id, check); });
            json body = outcome_json(out);
            body["changed"] = out.changed;
            body["verdict"] = out.verdict;
            body["session"] = *engine_->session(id);
            send(res, 200, body);
        });
    });

    s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            fail(res, 500, "internal", e.what());
        }
    });
}

} // namespace nac::service
