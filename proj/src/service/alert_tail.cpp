#include "nac/service/alert_tail.hpp"

#include <filesystem>
#include <fstream>

namespace nac::service {

AlertTail::AlertTail(std::string path, Handler handler, std::chrono::milliseconds interval)
    : path_(std::move(path)), handler_(std::move(handler)), interval_(interval)
{
}

AlertTail::~AlertTail() { stop(); }

void AlertTail::start(bool from_start)
{
    std::error_code ec;
    offset_ = from_start ? 0 : std::filesystem::file_size(path_, ec);
    if (ec) offset_ = 0;
    running_ = true;
    thread_ = std::thread([this] {
        while (running_) {
            poll_once();
            std::this_thread::sleep_for(interval_);
        }
    });
}

void AlertTail::stop()
{
    running_ = false;
    if (thread_.joinable()) {
        thread_.join();
    }
}

std::size_t AlertTail::poll_once()
{
    std::error_code ec;
    const auto size = std::filesystem::file_size(path_, ec);
    if (ec) {
        return 0;
    }
    if (size < offset_) {
        // Truncated or rotated.
        offset_ = 0;
        partial_.clear();
    }
    if (size == offset_) {
        return 0;
    }
    std::ifstream in(path_, std::ios::binary);
    in.seekg(static_cast<std::streamoff>(offset_));
    std::string chunk(size - offset_, '\0');
    in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
    chunk.resize(static_cast<std::size_t>(in.gcount()));
    offset_ += chunk.size();
    partial_ += chunk;

    std::size_t handled = 0;
    std::size_t start = 0;
    for (auto nl = partial_.find('\n'); nl != std::string::npos; nl = partial_.find('\n', start)) {
        auto line = partial_.substr(start, nl - start);
        start = nl + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        handler_(std::move(line));
        ++handled;
    }
    partial_.erase(0, start);
    return handled;
}

} // namespace nac::service
