#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "json.hpp"
#include "nac/model/address.hpp"
#include "nac/model/clock.hpp"
#include "nac/model/errors.hpp"
#include "nac/model/identity_types.hpp"
#include "nac/ngfw/resolver.hpp"
#include "nac/ngfw/rule.hpp"

namespace nac::ngfw {

/// What the firewall needs to know about the NAC session owning a source.
struct SessionView {
    std::string user_id;
    std::set<std::string> roles;
    model::DeviceClass device_class = model::DeviceClass::unknown;
};

/// session_id → view.
using SessionIndex = std::map<std::string, SessionView, std::less<>>;

struct PacketContext {
    model::Ipv4Address src;
    std::optional<std::uint16_t> src_port;
    model::Ipv4Address dst;
    std::optional<std::uint16_t> dst_port;
    /// One of tcp, udp, icmp, http (never any).
    Protocol protocol = Protocol::tcp;
    std::string application;
    std::optional<std::string> session_ref;
    /// Names the endpoints were resolved from, when the flow carried one.
    std::optional<std::string> src_name;
    std::optional<std::string> dst_name;

    /// ICMP carries no ports; `any` is not a packet protocol.
    void validate() const;
};

void to_json(nlohmann::json& j, const PacketContext& pkt);
void from_json(const nlohmann::json& j, PacketContext& pkt);

struct Verdict {
    Action action = Action::deny;
    /// nullopt when the default action applied.
    std::optional<std::size_t> rule_id;
    /// The packet named a session absent from the index.
    bool session_missing = false;

    bool operator==(const Verdict&) const = default;
};

void to_json(nlohmann::json& j, const Verdict& v);

struct MatchOptions {
    Action default_action = Action::deny;
    model::Millis now = 0;
    bool stale_permitted = false;
};

class ResolverExpired : public Error {
public:
    using Error::Error;
};

/// First-match evaluation. nac_user matches the owning session's user id or
/// any of its roles; FQDN fields match when the address is in the resolver's
/// set for that name or the packet carried that name. Throws ResolverExpired
/// when the rule set uses FQDNs, the snapshot has expired and stale matching
/// was not permitted.
Verdict match_packet(const RuleSet& rules, const PacketContext& pkt, const SessionIndex& sessions,
                     const ResolverSnapshot& resolver, const MatchOptions& options);

} // namespace nac::ngfw
