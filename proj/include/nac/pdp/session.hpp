#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "nac/identity/directory.hpp"
#include "nac/model/address.hpp"
#include "nac/model/identity_types.hpp"
#include "nac/pdp/decision.hpp"
#include "nac/posture/posture.hpp"

namespace nac::pdp {

enum class SessionState { pending, active, quarantined, disabled, terminated };

std::string_view to_string(SessionState state);
std::optional<SessionState> parse_session_state(std::string_view text);

/// The lifecycle graph. Terminated is absorbing; Disabled leaves only
/// through Pending (admin re-enable) or Terminated.
bool legal_transition(SessionState from, SessionState to);
/// Every state reachable in one legal step from `from`.
std::vector<SessionState> legal_targets(SessionState from);

struct HistoryEntry {
    SessionState from = SessionState::pending;
    SessionState to = SessionState::pending;
    /// Sequence number of the session.transition envelope.
    std::uint64_t seq = 0;
    model::Millis ts = 0;
    std::string reason;

    bool operator==(const HistoryEntry&) const = default;
};

struct Session {
    std::string id;
    model::UserIdentity user;
    /// False for sessions opened on an unknown principal (registration).
    bool authenticated = false;
    identity::AuthMethod cred_method = identity::AuthMethod::password;
    model::DeviceDescriptor device;
    model::NetworkLocation location;
    model::Ipv4Address ip;
    SessionState state = SessionState::pending;

    std::string role;
    int vlan = 0;
    std::string ruleset_ref;
    Portal portal = Portal::none;
    std::vector<posture::RemediationItem> remediation;

    /// Applications denied by a role-change response, lowercase.
    std::vector<std::string> denied_apps;
    std::uint32_t rate_limit_kbps = 0;
    /// Set by a threat quarantine; only an admin re-evaluation clears it.
    bool threat_hold = false;

    model::Millis opened_at = 0;
    std::vector<HistoryEntry> history;

    bool live() const { return state != SessionState::terminated; }
    std::uint64_t ordinal() const;
    bool operator==(const Session&) const = default;
};

void to_json(nlohmann::json& j, const Session& s);
void from_json(const nlohmann::json& j, Session& s);

/// sha256 over the canonical JSON array of sessions sorted by id.
std::string session_table_digest(const std::vector<Session>& sessions);

} // namespace nac::pdp
