#include "nac/ngfw/matcher.hpp"

#include "nac/model/json_util.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

namespace nac::ngfw {

namespace {

std::string lower(std::string_view text)
{
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool protocol_matches(Protocol rule, Protocol pkt)
{
    if (rule == Protocol::any || rule == pkt) {
        return true;
    }
    return rule == Protocol::tcp && pkt == Protocol::http;
}

bool address_matches(const AddressField& field, model::Ipv4Address addr, const std::optional<std::string>& name,
                     const ResolverSnapshot& resolver)
{
    if (std::holds_alternative<Wildcard>(field)) {
        return true;
    }
    if (const auto* prefix = std::get_if<model::Ipv4Prefix>(&field)) {
        return prefix->contains(addr);
    }
    const auto& fqdn = std::get<Fqdn>(field).name;
    if (name && lower(*name) == fqdn) {
        return true;
    }
    return resolver.contains(fqdn, addr);
}

bool user_matches(const std::optional<std::string>& field, const SessionView* session)
{
    if (!field) {
        return true;
    }
    if (!session) {
        return false;
    }
    if (lower(session->user_id) == *field) {
        return true;
    }
    return std::any_of(session->roles.begin(), session->roles.end(),
                       [&](const std::string& role) { return lower(role) == *field; });
}

} // namespace

void PacketContext::validate() const
{
    if (protocol == Protocol::any) {
        throw InvalidArgument("packet protocol must be concrete (tcp, udp, icmp or http)");
    }
    if (protocol == Protocol::icmp && (src_port || dst_port)) {
        throw InvalidArgument("icmp packets carry no ports");
    }
}

void to_json(nlohmann::json& j, const PacketContext& pkt)
{
    j = nlohmann::json{
        {"src", pkt.src},
        {"dst", pkt.dst},
        {"protocol", to_string(pkt.protocol)},
        {"application", pkt.application},
    };
    if (pkt.src_port) j["src_port"] = *pkt.src_port;
    if (pkt.dst_port) j["dst_port"] = *pkt.dst_port;
    if (pkt.session_ref) j["session_ref"] = *pkt.session_ref;
    if (pkt.src_name) j["src_name"] = *pkt.src_name;
    if (pkt.dst_name) j["dst_name"] = *pkt.dst_name;
}

void from_json(const nlohmann::json& j, PacketContext& pkt)
{
    using model::optional_field;
    using model::required;
    pkt.src = required<model::Ipv4Address>(j, "src");
    pkt.dst = required<model::Ipv4Address>(j, "dst");
    const auto proto = required<std::string>(j, "protocol");
    const auto parsed = parse_protocol(proto);
    if (!parsed) {
        throw InvalidArgument(fmt::format("unknown protocol '{}'", proto));
    }
    pkt.protocol = *parsed;
    pkt.application = lower(optional_field<std::string>(j, "application").value_or(""));
    pkt.src_port = optional_field<std::uint16_t>(j, "src_port");
    pkt.dst_port = optional_field<std::uint16_t>(j, "dst_port");
    pkt.session_ref = optional_field<std::string>(j, "session_ref");
    pkt.src_name = optional_field<std::string>(j, "src_name");
    pkt.dst_name = optional_field<std::string>(j, "dst_name");
    pkt.validate();
}

void to_json(nlohmann::json& j, const Verdict& v)
{
    j = nlohmann::json{{"action", to_string(v.action)}, {"session_missing", v.session_missing}};
    if (v.rule_id) {
        j["rule_id"] = *v.rule_id;
    } else {
        j["rule_id"] = "default";
    }
}

Verdict match_packet(const RuleSet& rules, const PacketContext& pkt, const SessionIndex& sessions,
                     const ResolverSnapshot& resolver, const MatchOptions& options)
{
    pkt.validate();
    if (!options.stale_permitted && resolver.expired(options.now) && rules.uses_fqdn()) {
        throw ResolverExpired(fmt::format("resolver snapshot taken at {} expired (now {})", resolver.snapshot_at(),
                                          options.now));
    }

    Verdict verdict;
    const SessionView* session = nullptr;
    if (pkt.session_ref) {
        const auto it = sessions.find(*pkt.session_ref);
        if (it != sessions.end()) {
            session = &it->second;
        } else {
            verdict.session_missing = true;
        }
    }
    const auto app = lower(pkt.application);

    for (const auto& rule : rules.rules) {
        if (!user_matches(rule.nac_user, session)) continue;
        if (rule.nac_device && (!session || session->device_class != *rule.nac_device)) continue;
        if (!address_matches(rule.src, pkt.src, pkt.src_name, resolver)) continue;
        if (!address_matches(rule.dst, pkt.dst, pkt.dst_name, resolver)) continue;
        if (!protocol_matches(rule.protocol, pkt.protocol)) continue;
        if (rule.application && *rule.application != app) continue;
        verdict.action = rule.action;
        verdict.rule_id = rule.rule_id;
        return verdict;
    }
    verdict.action = options.default_action;
    return verdict;
}

} // namespace nac::ngfw
