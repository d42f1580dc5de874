#include "nac/pdp/session.hpp"

#include "nac/model/digest.hpp"
#include "nac/model/errors.hpp"
#include "nac/model/json_util.hpp"

#include <algorithm>
#include <array>

#include <fmt/format.h>

namespace nac::pdp {

namespace {

constexpr std::array<std::pair<SessionState, std::string_view>, 5> kStateNames{{
    {SessionState::pending, "pending"},
    {SessionState::active, "active"},
    {SessionState::quarantined, "quarantined"},
    {SessionState::disabled, "disabled"},
    {SessionState::terminated, "terminated"},
}};

} // namespace

std::string_view to_string(SessionState state)
{
    for (const auto& [s, name] : kStateNames) {
        if (s == state) return name;
    }
    return "?";
}

std::optional<SessionState> parse_session_state(std::string_view text)
{
    for (const auto& [s, name] : kStateNames) {
        if (name == text) return s;
    }
    return std::nullopt;
}

bool legal_transition(SessionState from, SessionState to)
{
    using S = SessionState;
    if (from == S::terminated || from == to) {
        return false;
    }
    if (to == S::terminated) {
        return true;
    }
    switch (from) {
    case S::pending: return to == S::active || to == S::quarantined;
    case S::active: return to == S::quarantined || to == S::disabled;
    case S::quarantined: return to == S::active || to == S::disabled;
    case S::disabled: return to == S::pending;
    case S::terminated: return false;
    }
    return false;
}

std::vector<SessionState> legal_targets(SessionState from)
{
    std::vector<SessionState> out;
    for (const auto& [s, _] : kStateNames) {
        if (legal_transition(from, s)) out.push_back(s);
    }
    return out;
}

std::uint64_t Session::ordinal() const
{
    if (!id.starts_with("s-")) {
        return 0;
    }
    try {
        return std::stoull(id.substr(2));
    } catch (const std::exception&) {
        return 0;
    }
}

void to_json(nlohmann::json& j, const Session& s)
{
    auto history = nlohmann::json::array();
    for (const auto& h : s.history) {
        history.push_back({{"from", to_string(h.from)},
                           {"to", to_string(h.to)},
                           {"seq", h.seq},
                           {"ts", h.ts},
                           {"reason", h.reason}});
    }
    auto remediation = nlohmann::json::array();
    for (const auto& item : s.remediation) {
        remediation.push_back({{"requirement_id", item.requirement_id},
                               {"check_id", item.check_id},
                               {"instruction", item.instruction}});
    }
    j = nlohmann::json{
        {"id", s.id},
        {"user", s.user},
        {"authenticated", s.authenticated},
        {"cred_method", identity::to_string(s.cred_method)},
        {"device", s.device},
        {"location", s.location},
        {"ip", s.ip},
        {"state", to_string(s.state)},
        {"role", s.role},
        {"vlan", s.vlan},
        {"ruleset_ref", s.ruleset_ref},
        {"portal", to_string(s.portal)},
        {"remediation", remediation},
        {"denied_apps", s.denied_apps},
        {"rate_limit_kbps", s.rate_limit_kbps},
        {"threat_hold", s.threat_hold},
        {"opened_at", s.opened_at},
        {"history", history},
    };
}

void from_json(const nlohmann::json& j, Session& s)
{
    using model::required;
    s = Session{};
    s.id = required<std::string>(j, "id");
    s.user = required<model::UserIdentity>(j, "user");
    s.authenticated = required<bool>(j, "authenticated");
    const auto method = required<std::string>(j, "cred_method");
    const auto parsed_method = identity::parse_auth_method(method);
    if (!parsed_method) {
        throw InvalidArgument(fmt::format("unknown credential method '{}'", method));
    }
    s.cred_method = *parsed_method;
    s.device = required<model::DeviceDescriptor>(j, "device");
    s.location = required<model::NetworkLocation>(j, "location");
    s.ip = required<model::Ipv4Address>(j, "ip");
    const auto state = parse_session_state(required<std::string>(j, "state"));
    if (!state) {
        throw InvalidArgument("unknown session state");
    }
    s.state = *state;
    s.role = required<std::string>(j, "role");
    s.vlan = required<int>(j, "vlan");
    s.ruleset_ref = required<std::string>(j, "ruleset_ref");
    const auto portal = parse_portal(required<std::string>(j, "portal"));
    if (!portal) {
        throw InvalidArgument("unknown portal");
    }
    s.portal = *portal;
    for (const auto& item : required<nlohmann::json>(j, "remediation")) {
        s.remediation.push_back({required<std::string>(item, "requirement_id"),
                                 required<std::string>(item, "check_id"),
                                 required<std::string>(item, "instruction")});
    }
    s.denied_apps = required<std::vector<std::string>>(j, "denied_apps");
    s.rate_limit_kbps = required<std::uint32_t>(j, "rate_limit_kbps");
    s.threat_hold = required<bool>(j, "threat_hold");
    s.opened_at = required<model::Millis>(j, "opened_at");
    for (const auto& h : required<nlohmann::json>(j, "history")) {
        const auto from = parse_session_state(required<std::string>(h, "from"));
        const auto to = parse_session_state(required<std::string>(h, "to"));
        if (!from || !to) {
            throw InvalidArgument("unknown state in session history");
        }
        s.history.push_back({*from, *to, required<std::uint64_t>(h, "seq"), required<model::Millis>(h, "ts"),
                             required<std::string>(h, "reason")});
    }
}

std::string session_table_digest(const std::vector<Session>& sessions)
{
    std::vector<const Session*> sorted;
    sorted.reserve(sessions.size());
    for (const auto& s : sessions) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(), [](const Session* a, const Session* b) { return a->id < b->id; });
    auto arr = nlohmann::json::array();
    for (const auto* s : sorted) arr.push_back(*s);
    return model::sha256_hex(arr.dump());
}

} // namespace nac::pdp
