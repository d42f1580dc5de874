#include "nac/service/serial_queue.hpp"

#include <stdexcept>

namespace nac::service {

SerialQueue::SerialQueue() : worker_([this] { loop(); }) {}

SerialQueue::~SerialQueue() { stop(); }

void SerialQueue::push(std::function<void()> job)
{
    {
        std::lock_guard lock(mu_);
        if (stopping_) {
            throw std::runtime_error("queue stopped");
        }
        jobs_.push_back(std::move(job));
    }
    cv_.notify_one();
}

void SerialQueue::stop()
{
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    cv_.notify_all();
    if (worker_.joinable()) {
        worker_.join();
    }
}

void SerialQueue::loop()
{
    for (;;) {
        std::function<void()> job;
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [this] { return stopping_ || !jobs_.empty(); });
            if (jobs_.empty()) {
                return;
            }
            job = std::move(jobs_.front());
            jobs_.pop_front();
        }
        job();
    }
}

} // namespace nac::service
