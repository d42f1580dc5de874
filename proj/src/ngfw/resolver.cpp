#include "nac/ngfw/resolver.hpp"

#include "nac/model/errors.hpp"
#include "nac/ngfw/rule.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

namespace nac::ngfw {

namespace {

std::string normalize(std::string_view name)
{
    std::string out(name);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    if (!out.empty() && out.back() == '.') {
        out.pop_back();
    }
    if (!is_valid_fqdn(out)) {
        throw InvalidArgument(fmt::format("malformed FQDN '{}'", name));
    }
    return out;
}

} // namespace

ResolverSnapshot::ResolverSnapshot(std::map<std::string, AddressSet> entries, model::Millis snapshot_at,
                                   std::optional<std::int64_t> ttl_seconds)
    : snapshot_at_(snapshot_at)
    , ttl_seconds_(ttl_seconds)
{
    for (auto& [name, addrs] : entries) {
        if (addrs.empty()) {
            throw InvalidArgument(fmt::format("resolver entry '{}' has no addresses", name));
        }
        entries_.insert_or_assign(normalize(name), std::move(addrs));
    }
}

ResolverSnapshot ResolverSnapshot::from_json(const nlohmann::json& j, model::Millis snapshot_at,
                                             std::optional<std::int64_t> ttl_seconds)
{
    if (!j.is_object()) {
        throw InvalidArgument("resolver snapshot must be a JSON object of fqdn -> [addresses]");
    }
    std::map<std::string, AddressSet> entries;
    for (const auto& [name, list] : j.items()) {
        if (!list.is_array()) {
            throw InvalidArgument(fmt::format("resolver entry '{}' must be an array", name));
        }
        AddressSet addrs;
        for (const auto& a : list) {
            if (!a.is_string()) {
                throw InvalidArgument(fmt::format("resolver entry '{}' holds a non-string address", name));
            }
            addrs.insert(model::Ipv4Address::parse(a.get<std::string>()));
        }
        entries.emplace(name, std::move(addrs));
    }
    return ResolverSnapshot(std::move(entries), snapshot_at, ttl_seconds);
}

nlohmann::json ResolverSnapshot::to_json() const
{
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, addrs] : entries_) {
        auto& list = j[name] = nlohmann::json::array();
        for (const auto& a : addrs) {
            list.push_back(a.to_string());
        }
    }
    return j;
}

bool ResolverSnapshot::contains(std::string_view fqdn, model::Ipv4Address addr) const
{
    const auto* set = addresses(fqdn);
    return set && set->contains(addr);
}

const ResolverSnapshot::AddressSet* ResolverSnapshot::addresses(std::string_view fqdn) const
{
    const auto it = entries_.find(fqdn);
    return it == entries_.end() ? nullptr : &it->second;
}

bool ResolverSnapshot::expired(model::Millis now) const
{
    return ttl_seconds_ && snapshot_at_ + *ttl_seconds_ * 1000 < now;
}

ResolverSnapshot ResolverSnapshot::update(std::string_view fqdn, AddressSet addresses, model::Millis now) const
{
    if (addresses.empty()) {
        throw InvalidArgument(fmt::format("empty address set for '{}'", fqdn));
    }
    ResolverSnapshot next = *this;
    next.entries_.insert_or_assign(normalize(fqdn), std::move(addresses));
    next.snapshot_at_ = now;
    return next;
}

} // namespace nac::ngfw
