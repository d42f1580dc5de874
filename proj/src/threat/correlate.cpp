#include "nac/threat/correlate.hpp"

#include "nac/model/errors.hpp"

#include <fmt/format.h>

namespace nac::threat {

void AddressIndex::insert(model::Ipv4Address ip, const std::string& session_id)
{
    by_ip_[ip].insert(session_id);
}

void AddressIndex::erase(model::Ipv4Address ip, const std::string& session_id)
{
    const auto it = by_ip_.find(ip);
    if (it == by_ip_.end()) {
        return;
    }
    it->second.erase(session_id);
    if (it->second.empty()) {
        by_ip_.erase(it);
    }
}

std::optional<std::string> AddressIndex::lookup(model::Ipv4Address ip) const
{
    const auto it = by_ip_.find(ip);
    if (it == by_ip_.end()) {
        return std::nullopt;
    }
    if (it->second.size() > 1) {
        throw IntegrityError(fmt::format("{} live sessions share address {}", it->second.size(), ip.to_string()));
    }
    return *it->second.begin();
}

} // namespace nac::threat
