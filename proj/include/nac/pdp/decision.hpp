#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "nac/identity/directory.hpp"
#include "nac/pdp/nac_policy.hpp"
#include "nac/pdp/request.hpp"
#include "nac/posture/posture.hpp"
#include "nac/posture/store.hpp"

namespace nac::pdp {

enum class DecisionKind { grant, quarantine, deny };
enum class Portal { none, registration, remediation };

std::string_view to_string(DecisionKind kind);
std::string_view to_string(Portal portal);
std::optional<Portal> parse_portal(std::string_view text);

/// Row of the decision table that produced a verdict.
enum class DecisionRule {
    registration,       // unknown user on an unlisted device
    auth_denied,        // any other authentication failure
    device_profile,     // allowlisted device, posture not failing
    device_quarantine,  // allowlisted device with a failing stored posture
    posture_quarantine, // authenticated, posture NonCompliant or Unknown
    guest,              // guest account, posture Compliant
    role_grant,         // authenticated, posture Compliant
};

std::string_view to_string(DecisionRule rule);

struct PolicyDecision {
    DecisionKind kind = DecisionKind::deny;
    DecisionRule rule = DecisionRule::auth_denied;
    std::string role;
    int vlan = 0;
    std::string ruleset_ref;
    Portal portal = Portal::none;
    /// Deny and quarantine reason ("unknown-user", "posture-unknown", ...).
    std::string reason;
    std::vector<posture::RemediationItem> remediation;
    model::Millis decided_at = 0;
    std::string inputs_digest;

    /// Same verdict, ignoring time and digest.
    bool same_verdict(const PolicyDecision& other) const;
};

void to_json(nlohmann::json& j, const PolicyDecision& d);
void from_json(const nlohmann::json& j, PolicyDecision& d);

struct DecisionInputs {
    identity::AuthResult auth;
    bool device_allowlisted = false;
    posture::PostureVerdict posture;
};

/// The decision table, applied identity → posture → role mapping. Throws
/// ConfigError when the granted role has no VLAN binding.
PolicyDecision decide(const DecisionInputs& in, const NacPolicy& policy);

struct DecisionContext {
    const identity::Directory& directory;
    const NacPolicy& nac;
    const posture::PosturePolicy& posture_policy;
    const posture::PostureStore& store;
};

/// mac-only credentials are tried against MAC-keyed directory records first,
/// then the device-profile allowlist.
identity::AuthResult authenticate_request(const identity::Credential& cred, const DecisionContext& ctx,
                                          model::Millis now);

/// Full decision for a request. The request's own posture report, when
/// present, stands in for the stored one.
PolicyDecision decide_access(const AccessRequest& req, const DecisionContext& ctx, model::Millis now);

} // namespace nac::pdp
