#include "nac/pdp/decision.hpp"

#include "nac/model/errors.hpp"
#include "nac/model/json_util.hpp"

#include <fmt/format.h>

namespace nac::pdp {

std::string_view to_string(DecisionKind kind)
{
    switch (kind) {
    case DecisionKind::grant: return "grant";
    case DecisionKind::quarantine: return "quarantine";
    case DecisionKind::deny: return "deny";
    }
    return "?";
}

std::string_view to_string(Portal portal)
{
    switch (portal) {
    case Portal::none: return "";
    case Portal::registration: return "registration";
    case Portal::remediation: return "remediation";
    }
    return "?";
}

std::optional<Portal> parse_portal(std::string_view text)
{
    if (text.empty()) return Portal::none;
    if (text == "registration") return Portal::registration;
    if (text == "remediation") return Portal::remediation;
    return std::nullopt;
}

std::string_view to_string(DecisionRule rule)
{
    switch (rule) {
    case DecisionRule::registration: return "registration";
    case DecisionRule::auth_denied: return "auth-denied";
    case DecisionRule::device_profile: return "device-profile";
    case DecisionRule::device_quarantine: return "device-quarantine";
    case DecisionRule::posture_quarantine: return "posture-quarantine";
    case DecisionRule::guest: return "guest";
    case DecisionRule::role_grant: return "role-grant";
    }
    return "?";
}

bool PolicyDecision::same_verdict(const PolicyDecision& o) const
{
    return kind == o.kind && role == o.role && vlan == o.vlan && ruleset_ref == o.ruleset_ref &&
           portal == o.portal && reason == o.reason;
}

void to_json(nlohmann::json& j, const PolicyDecision& d)
{
    j = nlohmann::json{
        {"verdict", to_string(d.kind)},
        {"rule", to_string(d.rule)},
        {"decided_at", d.decided_at},
        {"inputs_digest", d.inputs_digest},
    };
    switch (d.kind) {
    case DecisionKind::grant:
        j["role"] = d.role;
        j["vlan"] = d.vlan;
        j["ruleset_ref"] = d.ruleset_ref;
        break;
    case DecisionKind::quarantine: {
        j["vlan"] = d.vlan;
        j["portal"] = to_string(d.portal);
        j["reason"] = d.reason;
        auto items = nlohmann::json::array();
        for (const auto& item : d.remediation) {
            items.push_back({{"requirement_id", item.requirement_id},
                             {"check_id", item.check_id},
                             {"instruction", item.instruction}});
        }
        j["remediation"] = items;
        break;
    }
    case DecisionKind::deny:
        j["reason"] = d.reason;
        break;
    }
}

void from_json(const nlohmann::json& j, PolicyDecision& d)
{
    using model::optional_field;
    using model::required;
    d = PolicyDecision{};
    const auto verdict = required<std::string>(j, "verdict");
    if (verdict == "grant") {
        d.kind = DecisionKind::grant;
    } else if (verdict == "quarantine") {
        d.kind = DecisionKind::quarantine;
    } else if (verdict == "deny") {
        d.kind = DecisionKind::deny;
    } else {
        throw InvalidArgument(fmt::format("unknown verdict '{}'", verdict));
    }
    const auto rule = required<std::string>(j, "rule");
    bool found = false;
    for (auto r : {DecisionRule::registration, DecisionRule::auth_denied, DecisionRule::device_profile,
                   DecisionRule::device_quarantine, DecisionRule::posture_quarantine, DecisionRule::guest,
                   DecisionRule::role_grant}) {
        if (to_string(r) == rule) {
            d.rule = r;
            found = true;
        }
    }
    if (!found) {
        throw InvalidArgument(fmt::format("unknown decision rule '{}'", rule));
    }
    d.decided_at = required<model::Millis>(j, "decided_at");
    d.inputs_digest = required<std::string>(j, "inputs_digest");
    d.role = optional_field<std::string>(j, "role").value_or("");
    d.vlan = optional_field<int>(j, "vlan").value_or(0);
    d.ruleset_ref = optional_field<std::string>(j, "ruleset_ref").value_or("");
    d.portal = parse_portal(optional_field<std::string>(j, "portal").value_or("")).value_or(Portal::none);
    d.reason = optional_field<std::string>(j, "reason").value_or("");
    if (const auto items = optional_field<nlohmann::json>(j, "remediation")) {
        for (const auto& item : *items) {
            d.remediation.push_back({required<std::string>(item, "requirement_id"),
                                     required<std::string>(item, "check_id"),
                                     optional_field<std::string>(item, "instruction").value_or("")});
        }
    }
}

namespace {

PolicyDecision quarantine(DecisionRule rule, int vlan, Portal portal, std::string reason,
                          std::vector<posture::RemediationItem> items = {})
{
    PolicyDecision d;
    d.kind = DecisionKind::quarantine;
    d.rule = rule;
    d.vlan = vlan;
    d.portal = portal;
    d.reason = std::move(reason);
    d.remediation = std::move(items);
    return d;
}

PolicyDecision grant(DecisionRule rule, std::string role, int vlan, std::string ruleset)
{
    PolicyDecision d;
    d.kind = DecisionKind::grant;
    d.rule = rule;
    d.role = std::move(role);
    d.vlan = vlan;
    d.ruleset_ref = std::move(ruleset);
    return d;
}

std::string posture_reason(posture::PostureStatus status)
{
    return status == posture::PostureStatus::unknown ? "posture-unknown" : "posture-non-compliant";
}

} // namespace

PolicyDecision decide(const DecisionInputs& in, const NacPolicy& policy)
{
    using posture::PostureStatus;

    if (!in.auth.ok()) {
        if (in.auth.failure() == identity::AuthFailure::unknown_user && !in.device_allowlisted) {
            return quarantine(DecisionRule::registration, policy.registration_vlan, Portal::registration,
                              "unknown-user");
        }
        PolicyDecision d;
        d.kind = DecisionKind::deny;
        d.rule = DecisionRule::auth_denied;
        d.reason = std::string(identity::to_string(in.auth.failure()));
        return d;
    }

    const auto& user = in.auth.identity();
    if (user.kind == model::UserKind::device_profile) {
        if (in.posture.status == PostureStatus::non_compliant) {
            return quarantine(DecisionRule::device_quarantine, policy.quarantine_vlan, Portal::remediation,
                              posture_reason(in.posture.status), in.posture.remediation);
        }
        for (const auto& role : user.roles) {
            if (const auto* b = policy.binding(role)) {
                return grant(DecisionRule::device_profile, b->role, b->vlan, b->ruleset);
            }
        }
        throw ConfigError(fmt::format("no VLAN mapping for device profile '{}'", user.user_id));
    }

    if (in.posture.status != PostureStatus::compliant) {
        return quarantine(DecisionRule::posture_quarantine, policy.quarantine_vlan, Portal::remediation,
                          posture_reason(in.posture.status), in.posture.remediation);
    }

    if (user.kind == model::UserKind::guest) {
        return grant(DecisionRule::guest, "guest", policy.guest_vlan, policy.guest_ruleset);
    }

    for (const auto& b : policy.roles) {
        if (user.has_role(b.role)) {
            return grant(DecisionRule::role_grant, b.role, b.vlan, b.ruleset);
        }
    }
    std::string held;
    for (const auto& r : user.roles) {
        held += (held.empty() ? "" : ",") + r;
    }
    throw ConfigError(fmt::format("no VLAN mapping for any role of '{}' ({})", user.user_id, held));
}

identity::AuthResult authenticate_request(const identity::Credential& cred, const DecisionContext& ctx,
                                          model::Millis now)
{
    auto result = ctx.directory.authenticate(cred, now);
    if (cred.method == identity::AuthMethod::mac_only && !result.ok() &&
        result.failure() == identity::AuthFailure::unknown_user) {
        return identity::profile_device(cred.principal, ctx.nac.device_profiles);
    }
    return result;
}

PolicyDecision decide_access(const AccessRequest& req, const DecisionContext& ctx, model::Millis now)
{
    req.validate();
    const auto at = req.requested_at.value_or(now);
    DecisionInputs in{authenticate_request(req.credential, ctx, at),
                      ctx.nac.device_profiles.find(req.device.mac) != nullptr,
                      ctx.store.verdict_for(req.posture ? &*req.posture : ctx.store.report(req.device.mac),
                                            req.device.mac, ctx.posture_policy)};
    auto d = decide(in, ctx.nac);
    d.decided_at = at;
    d.inputs_digest = inputs_digest(req);
    return d;
}

} // namespace nac::pdp
