#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "json.hpp"
#include "nac/model/address.hpp"
#include "nac/model/clock.hpp"

namespace nac::ngfw {

/// Immutable FQDN → address-set view. Updates return a new snapshot.
class ResolverSnapshot {
public:
    using AddressSet = std::set<model::Ipv4Address>;

    ResolverSnapshot() = default;
    /// `ttl_seconds` absent means the snapshot never expires.
    ResolverSnapshot(std::map<std::string, AddressSet> entries, model::Millis snapshot_at,
                     std::optional<std::int64_t> ttl_seconds);

    /// Accepts a JSON object mapping fqdn → [address, ...].
    static ResolverSnapshot from_json(const nlohmann::json& j, model::Millis snapshot_at = 0,
                                      std::optional<std::int64_t> ttl_seconds = std::nullopt);
    nlohmann::json to_json() const;

    bool contains(std::string_view fqdn, model::Ipv4Address addr) const;
    const AddressSet* addresses(std::string_view fqdn) const;
    bool expired(model::Millis now) const;

    /// Replaces the address set for `fqdn`, stamped at `now`. Throws
    /// InvalidArgument for an empty set or malformed name.
    ResolverSnapshot update(std::string_view fqdn, AddressSet addresses, model::Millis now) const;

    model::Millis snapshot_at() const { return snapshot_at_; }
    std::optional<std::int64_t> ttl_seconds() const { return ttl_seconds_; }
    const std::map<std::string, AddressSet, std::less<>>& entries() const { return entries_; }

private:
    std::map<std::string, AddressSet, std::less<>> entries_;
    model::Millis snapshot_at_ = 0;
    std::optional<std::int64_t> ttl_seconds_;
};

} // namespace nac::ngfw
