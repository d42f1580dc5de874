#pragma once

#include <cstdint>

namespace nac::model {

/// Milliseconds, either virtual (simulation) or since the Unix epoch.
using Millis = std::int64_t;

class Clock {
public:
    virtual ~Clock() = default;
    virtual Millis now() const = 0;
};

class SystemClock final : public Clock {
public:
    Millis now() const override;
};

/// Manually driven clock for deterministic runs. Time never moves backwards.
class VirtualClock final : public Clock {
public:
    explicit VirtualClock(Millis start = 0) : now_(start) {}

    Millis now() const override { return now_; }
    void set(Millis t);
    void advance(Millis delta) { set(now_ + delta); }

private:
    Millis now_;
};

} // namespace nac::model
