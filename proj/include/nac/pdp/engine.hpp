#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nac/enforce/command.hpp"
#include "nac/identity/directory.hpp"
#include "nac/model/clock.hpp"
#include "nac/model/envelope.hpp"
#include "nac/ngfw/matcher.hpp"
#include "nac/ngfw/rule.hpp"
#include "nac/pdp/audit.hpp"
#include "nac/pdp/decision.hpp"
#include "nac/pdp/nac_policy.hpp"
#include "nac/pdp/request.hpp"
#include "nac/pdp/session.hpp"
#include "nac/posture/posture.hpp"
#include "nac/threat/event.hpp"
#include "nac/threat/policy.hpp"

namespace nac::pdp {

enum class PolicyKind { firewall, threat, posture, nac };

std::string_view to_string(PolicyKind kind);
std::optional<PolicyKind> parse_policy_kind(std::string_view text);

/// Initial policy documents. Firewall rules are plain text, the rest JSON.
struct EngineConfig {
    std::string nac_document;
    std::string posture_document;
    std::string threat_document = R"({"clauses": []})";
    std::string firewall_document;
    model::Millis dedup_window = threat::kDefaultDedupWindow;
};

struct TransitionInfo {
    std::string session_id;
    SessionState from = SessionState::pending;
    SessionState to = SessionState::pending;
    std::string reason;
    std::uint64_t seq = 0;

    bool operator==(const TransitionInfo&) const = default;
};

/// What one mutation committed.
struct Outcome {
    std::vector<model::EventEnvelope> records;
    std::vector<enforce::EnforcementCommand> commands;
    std::vector<TransitionInfo> transitions;
};

struct AccessOutcome : Outcome {
    PolicyDecision decision;
    std::optional<std::string> session_id;
};

struct ReevaluateOutcome : Outcome {
    std::optional<PolicyDecision> decision;
};

struct GuestOutcome : Outcome {
    identity::GuestCredential credential;
};

struct RemediateOutcome : Outcome {
    bool changed = false;
    posture::PostureVerdict verdict;
};

enum class ThreatDisposition { applied, suppressed, uncorrelated, no_match, not_applicable };

std::string_view to_string(ThreatDisposition d);

struct ThreatOutcome : Outcome {
    ThreatDisposition disposition = ThreatDisposition::no_match;
    std::optional<std::string> session_id;
    std::optional<threat::CtcAction> action;
};

/// The policy decision point. Every mutation is one serialized transaction:
/// it validates, derives its audit records, applies them through the same
/// function replay uses, and hands the batch to the sink. A failed mutation
/// leaves no trace.
class Engine {
public:
    /// Throws InvalidArgument when an initial policy document is invalid.
    Engine(EngineConfig config, identity::Directory& directory, const model::Clock& clock);
    ~Engine();
    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    /// Records go to `sink` after each commit; nullptr keeps them in memory only.
    void set_sink(AuditSink* sink);

    AccessOutcome request_access(const AccessRequest& req);
    Outcome terminate(const std::string& session_id, const std::string& reason, const std::string& admin = "admin");
    Outcome disable(const std::string& session_id, const std::string& reason, const std::string& admin = "admin");
    Outcome reenable(const std::string& session_id, const std::string& admin = "admin");
    /// Admin-triggered re-evaluation; the only path out of a threat hold.
    ReevaluateOutcome reevaluate(const std::string& session_id, const std::string& admin = "admin");

    Outcome submit_posture(const posture::PostureReport& report);
    Outcome submit_scan(const posture::ScanReport& scan);
    RemediateOutcome remediate(const std::string& session_id, const std::string& check);
    GuestOutcome register_guest(const identity::GuestRegistration& reg);
    ThreatOutcome handle_threat(const threat::ThreatEvent& evt);
    /// Validates, dry-runs every live session against the new policy and
    /// swaps. Throws InvalidArgument (RuleParseError for rules) on rejection.
    Outcome update_policy(PolicyKind kind, std::string_view document);
    /// Appends a record carrying the current session-table digest.
    Outcome checkpoint();

    /// Rebuilds state from an audit log into a fresh engine. Verifies seq
    /// continuity and checkpoint digests (IntegrityError on mismatch).
    void replay(const std::vector<model::EventEnvelope>& records);

    std::vector<Session> sessions() const;
    std::optional<Session> session(std::string_view id) const;
    std::string session_digest() const;
    /// Records after the first `ordinal` ones.
    std::vector<model::EventEnvelope> audit_since(std::size_t ordinal) const;
    std::size_t audit_size() const;
    std::vector<enforce::EnforcementCommand> commands_since(std::uint64_t seq) const;
    std::string policy_document(PolicyKind kind) const;
    NacPolicy nac_policy() const;
    posture::PosturePolicy posture_policy() const;
    threat::ThreatPolicy threat_policy() const;
    ngfw::RuleSet firewall_rules() const;
    posture::PostureVerdict posture_verdict(const model::MacAddress& mac) const;
    std::optional<posture::PostureReport> posture_report(const model::MacAddress& mac) const;
    /// Live session holding `ip`, if any.
    std::optional<std::string> session_for_ip(model::Ipv4Address ip) const;
    /// Firewall view of the live sessions.
    ngfw::SessionIndex session_index() const;
    model::Millis dedup_window() const;
    const model::Clock& clock() const;

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

} // namespace nac::pdp
