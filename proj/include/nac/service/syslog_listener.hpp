#pragma once

#include <atomic>
#include <functional>
#include <string>
#include <thread>

namespace nac::service {

/// Receives UDP datagrams and hands each one to the handler on the
/// listener thread. An SNMP trap receiver would attach the same way.
class SyslogListener {
public:
    using Handler = std::function<void(std::string datagram)>;

    SyslogListener(std::string host, int port, Handler handler);
    ~SyslogListener();
    SyslogListener(const SyslogListener&) = delete;
    SyslogListener& operator=(const SyslogListener&) = delete;

    /// Binds and starts the thread. Throws ConfigError if the bind fails.
    void start();
    void stop();
    /// The bound port (useful after binding port 0).
    int port() const { return port_; }

private:
    void loop();

    std::string host_;
    int port_;
    Handler handler_;
    int fd_ = -1;
    std::atomic<bool> running_{false};
    std::thread thread_;
};

} // namespace nac::service
