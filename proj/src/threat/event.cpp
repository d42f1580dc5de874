#include "nac/threat/event.hpp"

#include "nac/model/digest.hpp"
#include "nac/model/errors.hpp"
#include "nac/model/json_util.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

namespace nac::threat {

std::string_view to_string(Proto proto)
{
    switch (proto) {
    case Proto::tcp: return "TCP";
    case Proto::udp: return "UDP";
    case Proto::icmp: return "ICMP";
    }
    return "?";
}

std::optional<Proto> parse_proto(std::string_view text)
{
    std::string t(text);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::toupper(c); });
    if (t == "TCP") return Proto::tcp;
    if (t == "UDP") return Proto::udp;
    if (t == "ICMP") return Proto::icmp;
    return std::nullopt;
}

namespace {

std::string endpoint_text(const Endpoint& ep)
{
    return ep.port ? fmt::format("{}:{}", ep.addr.to_string(), *ep.port) : ep.addr.to_string();
}

} // namespace

std::string compute_dedup_key(const ThreatEvent& evt, Millis window)
{
    if (window <= 0) {
        throw InvalidArgument("dedup window must be positive");
    }
    const auto bucket = evt.observed_at >= 0 ? evt.observed_at / window : (evt.observed_at - window + 1) / window;
    const auto material = fmt::format("{}:{}:{}|{}|{}|{}", evt.sig.gid, evt.sig.sid, evt.sig.rev,
                                      endpoint_text(evt.src), endpoint_text(evt.dst), bucket);
    return model::sha256_hex(material).substr(0, 16);
}

void to_json(nlohmann::json& j, const ThreatEvent& evt)
{
    auto ep = [](const Endpoint& e) {
        nlohmann::json o{{"addr", e.addr}};
        if (e.port) o["port"] = *e.port;
        return o;
    };
    j = nlohmann::json{
        {"gid", evt.sig.gid},
        {"sid", evt.sig.sid},
        {"rev", evt.sig.rev},
        {"message", evt.message},
        {"category", evt.category},
        {"priority", evt.priority},
        {"protocol", to_string(evt.protocol)},
        {"src", ep(evt.src)},
        {"dst", ep(evt.dst)},
        {"observed_at", evt.observed_at},
        {"dedup_key", evt.dedup_key},
    };
}

ThreatEvent threat_event_from_json(const nlohmann::json& j, Millis window)
{
    using model::optional_field;
    using model::required;
    ThreatEvent evt;
    evt.sig.gid = optional_field<std::uint32_t>(j, "gid").value_or(1);
    evt.sig.sid = required<std::uint32_t>(j, "sid");
    evt.sig.rev = optional_field<std::uint32_t>(j, "rev").value_or(1);
    evt.message = optional_field<std::string>(j, "message").value_or("");
    evt.category = optional_field<std::string>(j, "category").value_or("");
    evt.priority = required<int>(j, "priority");
    if (evt.priority < 1) {
        throw InvalidArgument("priority must be >= 1");
    }
    const auto proto = required<std::string>(j, "protocol");
    const auto parsed = parse_proto(proto);
    if (!parsed) {
        throw InvalidArgument(fmt::format("unknown protocol '{}'", proto));
    }
    evt.protocol = *parsed;
    auto ep = [&](std::string_view field) {
        const auto o = required<nlohmann::json>(j, field);
        Endpoint e{required<model::Ipv4Address>(o, "addr"), optional_field<std::uint16_t>(o, "port")};
        if (evt.protocol == Proto::icmp && e.port) {
            throw InvalidArgument("icmp events carry no ports");
        }
        return e;
    };
    evt.src = ep("src");
    evt.dst = ep("dst");
    evt.observed_at = required<Millis>(j, "observed_at");
    evt.dedup_key = optional_field<std::string>(j, "dedup_key").value_or(compute_dedup_key(evt, window));
    return evt;
}

} // namespace nac::threat
