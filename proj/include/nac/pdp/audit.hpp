#pragma once

#include <cstdio>
#include <iosfwd>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "nac/model/envelope.hpp"

namespace nac::pdp {

/// Envelope kinds written by the engine.
namespace kind {
inline constexpr std::string_view access_request = "access.request";
inline constexpr std::string_view session_opened = "session.opened";
inline constexpr std::string_view session_transition = "session.transition";
inline constexpr std::string_view session_updated = "session.updated";
inline constexpr std::string_view guest_registered = "identity.guest-registered";
inline constexpr std::string_view posture_report = "posture.report";
inline constexpr std::string_view posture_scan = "posture.scan";
inline constexpr std::string_view posture_remediate = "posture.remediate";
inline constexpr std::string_view policy_update = "policy.update";
inline constexpr std::string_view threat_alert = "threat.alert";
inline constexpr std::string_view admin_terminate = "admin.terminate";
inline constexpr std::string_view admin_disable = "admin.disable";
inline constexpr std::string_view admin_reenable = "admin.reenable";
inline constexpr std::string_view admin_reevaluate = "admin.reevaluate";
inline constexpr std::string_view checkpoint = "audit.checkpoint";
} // namespace kind

/// Receives committed records, in order, one batch per engine mutation.
class AuditSink {
public:
    virtual ~AuditSink() = default;
    virtual void append(const std::vector<model::EventEnvelope>& records) = 0;
};

/// Appends one JSON envelope per line and flushes after every batch.
class JsonlAuditSink final : public AuditSink {
public:
    explicit JsonlAuditSink(const std::string& path);
    ~JsonlAuditSink() override;
    JsonlAuditSink(const JsonlAuditSink&) = delete;
    JsonlAuditSink& operator=(const JsonlAuditSink&) = delete;

    void append(const std::vector<model::EventEnvelope>& records) override;

private:
    std::mutex mu_;
    std::FILE* file_ = nullptr;
};

/// Reads an audit log. Throws InvalidArgument naming the line for a
/// malformed record and IntegrityError when a source's seq skips or repeats.
std::vector<model::EventEnvelope> read_audit(std::istream& in);
std::vector<model::EventEnvelope> read_audit_file(const std::string& path);

/// Checks that every source's seq runs 1, 2, 3, ... without gaps.
void check_gap_free(const std::vector<model::EventEnvelope>& records);

} // namespace nac::pdp
