#include "nac/threat/policy.hpp"

#include "nac/model/errors.hpp"
#include "nac/model/json_util.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

namespace nac::threat {

namespace {

std::string lower(std::string_view text)
{
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

const std::array<std::pair<CtcKind, std::string_view>, 5> kKindNames{{
    {CtcKind::quarantine, "quarantine"},
    {CtcKind::role_change, "role_change"},
    {CtcKind::terminate, "terminate"},
    {CtcKind::disable, "disable"},
    {CtcKind::rate_limit, "rate_limit"},
}};

} // namespace

std::string_view to_string(CtcKind kind)
{
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "?";
}

std::optional<CtcKind> parse_ctc_kind(std::string_view text)
{
    for (const auto& [k, name] : kKindNames) {
        if (name == text) return k;
    }
    return std::nullopt;
}

void CtcAction::validate() const
{
    switch (kind) {
    case CtcKind::role_change:
        if (deny_applications.empty()) {
            throw InvalidArgument("role_change needs at least one application in deny_applications");
        }
        for (const auto& app : deny_applications) {
            if (app.empty() || app == "*" || app.find_first_of(" \t") != std::string::npos) {
                throw InvalidArgument(fmt::format("invalid application tag '{}'", app));
            }
        }
        break;
    case CtcKind::rate_limit:
        if (kbps == 0) {
            throw InvalidArgument("rate_limit kbps must be > 0");
        }
        break;
    default:
        break;
    }
}

void to_json(nlohmann::json& j, const CtcAction& action)
{
    j = nlohmann::json{{"type", to_string(action.kind)}};
    if (action.kind == CtcKind::role_change) j["deny_applications"] = action.deny_applications;
    if (action.kind == CtcKind::rate_limit) j["kbps"] = action.kbps;
}

void from_json(const nlohmann::json& j, CtcAction& action)
{
    const auto type = model::required<std::string>(j, "type");
    const auto kind = parse_ctc_kind(type);
    if (!kind) {
        throw InvalidArgument(fmt::format("unknown action type '{}'", type));
    }
    action = CtcAction{};
    action.kind = *kind;
    if (action.kind == CtcKind::role_change) {
        for (const auto& app : model::required<std::vector<std::string>>(j, "deny_applications")) {
            action.deny_applications.push_back(lower(app));
        }
    }
    if (action.kind == CtcKind::rate_limit) {
        const auto kbps = model::required<std::int64_t>(j, "kbps");
        if (kbps <= 0 || kbps > UINT32_MAX) {
            throw InvalidArgument("rate_limit kbps must be > 0");
        }
        action.kbps = static_cast<std::uint32_t>(kbps);
    }
    action.validate();
}

bool ThreatMatch::empty() const
{
    return !category && !protocol && !sid && !src && !dst && !port && !max_priority && !message_contains;
}

bool ThreatMatch::matches(const ThreatEvent& evt) const
{
    if (category && lower(*category) != lower(evt.category)) return false;
    if (protocol && *protocol != evt.protocol) return false;
    if (sid && *sid != evt.sig.sid) return false;
    if (src && !src->contains(evt.src.addr)) return false;
    if (dst && !dst->contains(evt.dst.addr)) return false;
    if (port && evt.src.port != port && evt.dst.port != port) return false;
    if (max_priority && evt.priority > *max_priority) return false;
    if (message_contains && evt.message.find(*message_contains) == std::string::npos) return false;
    return true;
}

void ThreatPolicy::validate() const
{
    for (std::size_t i = 0; i < clauses.size(); ++i) {
        try {
            if (clauses[i].match.empty()) {
                throw InvalidArgument("match needs at least one field");
            }
            if (clauses[i].match.max_priority && *clauses[i].match.max_priority < 1) {
                throw InvalidArgument("max_priority must be >= 1");
            }
            clauses[i].action.validate();
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(fmt::format("clause {}: {}", i + 1, e.what()));
        }
    }
}

void to_json(nlohmann::json& j, const ThreatPolicy& policy)
{
    auto clauses = nlohmann::json::array();
    for (const auto& c : policy.clauses) {
        nlohmann::json m = nlohmann::json::object();
        if (c.match.category) m["category"] = *c.match.category;
        if (c.match.protocol) m["protocol"] = to_string(*c.match.protocol);
        if (c.match.sid) m["sid"] = *c.match.sid;
        if (c.match.src) m["src"] = *c.match.src;
        if (c.match.dst) m["dst"] = *c.match.dst;
        if (c.match.port) m["port"] = *c.match.port;
        if (c.match.max_priority) m["max_priority"] = *c.match.max_priority;
        if (c.match.message_contains) m["message_contains"] = *c.match.message_contains;
        clauses.push_back({{"match", m}, {"action", c.action}});
    }
    j = nlohmann::json{{"clauses", clauses}};
}

void from_json(const nlohmann::json& j, ThreatPolicy& policy)
{
    using model::optional_field;
    using model::required;
    policy.clauses.clear();
    const auto clauses = required<nlohmann::json>(j, "clauses");
    if (!clauses.is_array()) {
        throw InvalidArgument("'clauses' must be an array");
    }
    static const std::array<std::string_view, 8> known{"category", "protocol", "sid", "src",
                                                       "dst", "port", "max_priority", "message_contains"};
    for (std::size_t i = 0; i < clauses.size(); ++i) {
        try {
            const auto& c = clauses[i];
            const auto m = required<nlohmann::json>(c, "match");
            if (!m.is_object()) {
                throw InvalidArgument("'match' must be an object");
            }
            for (const auto& [key, _] : m.items()) {
                if (std::find(known.begin(), known.end(), key) == known.end()) {
                    throw InvalidArgument(fmt::format("unknown match field '{}'", key));
                }
            }
            ThreatClause clause;
            clause.match.category = optional_field<std::string>(m, "category");
            if (const auto p = optional_field<std::string>(m, "protocol")) {
                clause.match.protocol = parse_proto(*p);
                if (!clause.match.protocol) {
                    throw InvalidArgument(fmt::format("unknown protocol '{}'", *p));
                }
            }
            clause.match.sid = optional_field<std::uint32_t>(m, "sid");
            clause.match.src = optional_field<model::Ipv4Prefix>(m, "src");
            clause.match.dst = optional_field<model::Ipv4Prefix>(m, "dst");
            clause.match.port = optional_field<std::uint16_t>(m, "port");
            clause.match.max_priority = optional_field<int>(m, "max_priority");
            clause.match.message_contains = optional_field<std::string>(m, "message_contains");
            clause.action = required<CtcAction>(c, "action");
            policy.clauses.push_back(std::move(clause));
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(fmt::format("clause {}: {}", i + 1, e.what()));
        }
    }
    policy.validate();
}

std::optional<Selection> select_action(const ThreatEvent& evt, const ThreatPolicy& policy)
{
    for (std::size_t i = 0; i < policy.clauses.size(); ++i) {
        if (policy.clauses[i].match.matches(evt)) {
            return Selection{i, policy.clauses[i].action};
        }
    }
    return std::nullopt;
}

} // namespace nac::threat
