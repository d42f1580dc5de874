#include "nac/service/syslog_listener.hpp"

#include "nac/model/errors.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <fmt/format.h>

namespace nac::service {

SyslogListener::SyslogListener(std::string host, int port, Handler handler)
    : host_(std::move(host)), port_(port), handler_(std::move(handler))
{
}

SyslogListener::~SyslogListener() { stop(); }

void SyslogListener::start()
{
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) {
        throw ConfigError(fmt::format("syslog socket: {}", std::strerror(errno)));
    }
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port_));
    if (::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1) {
        ::close(fd_);
        fd_ = -1;
        throw ConfigError(fmt::format("syslog: bad listen address '{}'", host_));
    }
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        const auto err = errno;
        ::close(fd_);
        fd_ = -1;
        throw ConfigError(fmt::format("syslog bind {}:{}: {}", host_, port_, std::strerror(err)));
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    running_ = true;
    thread_ = std::thread([this] { loop(); });
}

void SyslogListener::stop()
{
    running_ = false;
    if (thread_.joinable()) {
        thread_.join();
    }
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void SyslogListener::loop()
{
    char buf[8192];
    while (running_) {
        pollfd p{fd_, POLLIN, 0};
        if (::poll(&p, 1, 100) <= 0) {
            continue;
        }
        const auto n = ::recv(fd_, buf, sizeof buf, 0);
        if (n > 0) {
            handler_(std::string(buf, static_cast<std::size_t>(n)));
        }
    }
}

} // namespace nac::service
