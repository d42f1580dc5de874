#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <mutex>
#include <thread>

namespace nac::service {

/// Runs submitted jobs one at a time, in submission order, on a single
/// worker thread.
class SerialQueue {
public:
    SerialQueue();
    ~SerialQueue();
    SerialQueue(const SerialQueue&) = delete;
    SerialQueue& operator=(const SerialQueue&) = delete;

    template <typename F>
    auto submit(F&& fn) -> std::future<decltype(fn())>
    {
        using R = decltype(fn());
        auto task = std::make_shared<std::packaged_task<R()>>(std::forward<F>(fn));
        auto fut = task->get_future();
        push([task] { (*task)(); });
        return fut;
    }

    /// Submits and waits; exceptions propagate to the caller.
    template <typename F>
    auto run(F&& fn) -> decltype(fn())
    {
        return submit(std::forward<F>(fn)).get();
    }

    /// Drains queued jobs and joins the worker.
    void stop();

private:
    void push(std::function<void()> job);
    void loop();

    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> jobs_;
    bool stopping_ = false;
    std::thread worker_;
};

} // namespace nac::service
