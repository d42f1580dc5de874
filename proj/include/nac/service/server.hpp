#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "nac/identity/directory.hpp"
#include "nac/model/clock.hpp"
#include "nac/ngfw/resolver.hpp"
#include "nac/pdp/audit.hpp"
#include "nac/pdp/engine.hpp"
#include "nac/service/alert_tail.hpp"
#include "nac/service/config.hpp"
#include "nac/service/serial_queue.hpp"
#include "nac/service/syslog_listener.hpp"

namespace httplib {
class Server;
}

namespace nac::service {

/// Builds the engine from the configured files, replays the existing audit
/// log, and serves the HTTP API. Every mutation goes through one serial
/// queue; reads run on the handler threads.
class Service {
public:
    /// `clock` defaults to the system clock and must outlive the service.
    explicit Service(ServiceConfig config, const model::Clock* clock = nullptr);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds the HTTP server (port 0 picks a free one) and the ingestion
    /// channels, then serves on a background thread. Returns the HTTP port.
    int start();
    /// Blocks until stop() is called from elsewhere.
    void wait();
    /// Stops intake, appends a checkpoint record and closes the audit log.
    void stop();

    int http_port() const { return http_port_; }
    int syslog_port() const;
    const pdp::Engine& engine() const { return *engine_; }
    /// Ingestion counters: accepted alerts and rejected lines.
    std::size_t alerts_ingested() const { return alerts_ok_; }
    std::size_t alerts_rejected() const { return alerts_bad_; }

    /// Runs one alert line or syslog datagram through the engine.
    void ingest_line(const std::string& text, bool syslog);

private:
    void routes();

    ServiceConfig config_;
    std::unique_ptr<model::SystemClock> own_clock_;
    const model::Clock* clock_;
    std::unique_ptr<identity::Directory> directory_;
    std::unique_ptr<pdp::Engine> engine_;
    std::unique_ptr<pdp::JsonlAuditSink> sink_;
    mutable std::mutex resolver_mu_;
    ngfw::ResolverSnapshot resolver_;
    SerialQueue queue_;
    std::unique_ptr<httplib::Server> http_;
    std::unique_ptr<SyslogListener> syslog_;
    std::unique_ptr<AlertTail> tail_;
    std::thread http_thread_;
    int http_port_ = 0;
    std::atomic<std::size_t> alerts_ok_{0};
    std::atomic<std::size_t> alerts_bad_{0};
    std::atomic<bool> stopped_{false};
    std::mutex stop_mu_;
};

/// Builds an engine from the configured policy files.
pdp::EngineConfig engine_config(const ServiceConfig& config);

} // namespace nac::service
