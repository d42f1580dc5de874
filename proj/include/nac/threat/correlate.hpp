#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

#include "nac/model/address.hpp"
#include "nac/threat/event.hpp"

namespace nac::threat {

/// Live-session lookup keyed by assigned address. The engine keeps it in
/// step with session liveness.
class AddressIndex {
public:
    void insert(model::Ipv4Address ip, const std::string& session_id);
    void erase(model::Ipv4Address ip, const std::string& session_id);
    void clear() { by_ip_.clear(); }

    /// The unique session holding `ip`; throws IntegrityError when more than
    /// one live session claims it.
    std::optional<std::string> lookup(model::Ipv4Address ip) const;
    bool contains(model::Ipv4Address ip) const { return by_ip_.contains(ip); }

private:
    std::map<model::Ipv4Address, std::set<std::string>> by_ip_;
};

/// Maps an alert to the session owning its source address.
inline std::optional<std::string> correlate(const ThreatEvent& evt, const AddressIndex& index)
{
    return index.lookup(evt.src.addr);
}

} // namespace nac::threat
