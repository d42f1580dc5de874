#include "nac/model/clock.hpp"

#include "nac/model/errors.hpp"

#include <chrono>

namespace nac::model {

Millis SystemClock::now() const
{
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

void VirtualClock::set(Millis t)
{
    if (t < now_) {
        throw InvalidArgument("virtual clock cannot move backwards");
    }
    now_ = t;
}

} // namespace nac::model
