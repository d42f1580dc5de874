#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "nac/model/clock.hpp"
#include "nac/model/identity_types.hpp"

namespace nac::posture {

using model::Millis;

enum class CheckType { boolean, count };

struct CheckSpec {
    std::string id;
    CheckType type;
};

/// The built-in checks an endpoint agent reports. Counts are non-negative.
///   av_installed (bool), av_signature_age_days (count), patch_level (count),
///   firewall_enabled (bool), forbidden_process_present (bool)
const std::vector<CheckSpec>& builtin_checks();
const CheckSpec* find_check(std::string_view id);

/// Synthetic requirement id raised by a critical vulnerability-scan finding.
inline constexpr std::string_view kCriticalVulnId = "critical-vuln";

using CheckValue = std::variant<bool, std::int64_t>;

std::string to_string(const CheckValue& value);

struct PostureReport {
    model::DeviceDescriptor device;
    std::map<std::string, CheckValue> checks;
    Millis collected_at = 0;

    /// Throws InvalidArgument on unknown check ids or type mismatches.
    void validate() const;
    bool operator==(const PostureReport&) const = default;
};

void to_json(nlohmann::json& j, const PostureReport& report);
void from_json(const nlohmann::json& j, PostureReport& report);

enum class Comparator { eq, le, ge };
enum class Severity { mandatory, advisory };

struct Requirement {
    std::string id;
    std::string check_id;
    Comparator comparator = Comparator::eq;
    CheckValue threshold;
    Severity severity = Severity::mandatory;
    std::string instruction;

    bool satisfied_by(const CheckValue& value) const;
};

struct PosturePolicy {
    std::vector<Requirement> requirements;
    double critical_threshold = 7.0;

    /// Non-empty, known checks, type-correct thresholds, booleans compared
    /// with '=' only, no duplicate check_id within one severity, unique ids.
    void validate() const;
};

void to_json(nlohmann::json& j, const PosturePolicy& policy);
void from_json(const nlohmann::json& j, PosturePolicy& policy);

enum class PostureStatus { compliant, non_compliant, unknown };

std::string_view to_string(PostureStatus status);

struct RemediationItem {
    std::string requirement_id;
    std::string check_id;
    std::string instruction;

    bool operator==(const RemediationItem&) const = default;
};

struct PostureVerdict {
    PostureStatus status = PostureStatus::unknown;
    /// Ids of every failed requirement, mandatory and advisory, policy order.
    std::vector<std::string> failed;
    /// One item per failed mandatory requirement, policy order.
    std::vector<RemediationItem> remediation;

    bool operator==(const PostureVerdict&) const = default;
};

void to_json(nlohmann::json& j, const PostureVerdict& verdict);

/// A check absent from the report counts as failing every requirement on it.
PostureVerdict evaluate_posture(const PostureReport* report, const PosturePolicy& policy);
inline PostureVerdict evaluate_posture(const std::optional<PostureReport>& report, const PosturePolicy& policy)
{
    return evaluate_posture(report ? &*report : nullptr, policy);
}

struct ScanFinding {
    std::string vuln_id;
    double severity = 0.0;
};

struct ScanReport {
    model::MacAddress mac;
    std::vector<ScanFinding> findings;
    Millis scanned_at = 0;

    /// Severities must lie in [0, 10].
    void validate() const;
};

void to_json(nlohmann::json& j, const ScanReport& scan);
void from_json(const nlohmann::json& j, ScanReport& scan);

} // namespace nac::posture
