#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "nac/model/address.hpp"
#include "nac/model/clock.hpp"

namespace nac::threat {

using model::Millis;

struct SignatureId {
    std::uint32_t gid = 1;
    std::uint32_t sid = 0;
    std::uint32_t rev = 1;

    auto operator<=>(const SignatureId&) const = default;
};

enum class Proto { tcp, udp, icmp };

std::string_view to_string(Proto proto);
/// Case-insensitive.
std::optional<Proto> parse_proto(std::string_view text);

struct Endpoint {
    model::Ipv4Address addr;
    std::optional<std::uint16_t> port;

    bool operator==(const Endpoint&) const = default;
};

/// Normalized IDS alert.
struct ThreatEvent {
    SignatureId sig;
    std::string message;
    std::string category;
    /// 1 is most severe.
    int priority = 1;
    Proto protocol = Proto::tcp;
    Endpoint src;
    Endpoint dst;
    Millis observed_at = 0;
    std::string dedup_key;

    bool operator==(const ThreatEvent&) const = default;
};

inline constexpr Millis kDefaultDedupWindow = 60'000;

/// Stable hash of (signature, src, dst, observed_at / window), hex encoded.
std::string compute_dedup_key(const ThreatEvent& evt, Millis window = kDefaultDedupWindow);

void to_json(nlohmann::json& j, const ThreatEvent& evt);
/// Fills dedup_key from `window` when the document omits it.
ThreatEvent threat_event_from_json(const nlohmann::json& j, Millis window = kDefaultDedupWindow);

} // namespace nac::threat
