#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>

namespace nac::service {

/// Follows an alert file like `tail -f`, handing each complete new line to
/// the handler. A file that shrinks is read again from the start.
class AlertTail {
public:
    using Handler = std::function<void(std::string line)>;

    AlertTail(std::string path, Handler handler, std::chrono::milliseconds interval = std::chrono::milliseconds(200));
    ~AlertTail();
    AlertTail(const AlertTail&) = delete;
    AlertTail& operator=(const AlertTail&) = delete;

    /// `from_start` false skips what the file already holds.
    void start(bool from_start = false);
    void stop();
    /// Reads whatever is new right now; returns the number of lines handled.
    std::size_t poll_once();

private:
    std::string path_;
    Handler handler_;
    std::chrono::milliseconds interval_;
    std::uint64_t offset_ = 0;
    std::string partial_;
    std::atomic<bool> running_{false};
    std::thread thread_;
};

} // namespace nac::service
