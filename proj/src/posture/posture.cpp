#include "nac/posture/posture.hpp"

#include "nac/model/errors.hpp"
#include "nac/model/json_util.hpp"

#include <cmath>
#include <set>
#include <utility>

#include <fmt/format.h>

namespace nac::posture {

using model::optional_field;
using model::required;

const std::vector<CheckSpec>& builtin_checks()
{
    static const std::vector<CheckSpec> kChecks{
        {"av_installed", CheckType::boolean},
        {"av_signature_age_days", CheckType::count},
        {"patch_level", CheckType::count},
        {"firewall_enabled", CheckType::boolean},
        {"forbidden_process_present", CheckType::boolean},
    };
    return kChecks;
}

const CheckSpec* find_check(std::string_view id)
{
    for (const auto& spec : builtin_checks()) {
        if (spec.id == id) {
            return &spec;
        }
    }
    return nullptr;
}

std::string to_string(const CheckValue& value)
{
    if (const auto* b = std::get_if<bool>(&value)) {
        return *b ? "true" : "false";
    }
    return std::to_string(std::get<std::int64_t>(value));
}

namespace {

bool type_matches(CheckType type, const CheckValue& value)
{
    return type == CheckType::boolean ? std::holds_alternative<bool>(value)
                                      : std::holds_alternative<std::int64_t>(value);
}

CheckValue value_from_json(const nlohmann::json& j, std::string_view check_id)
{
    if (j.is_boolean()) {
        return j.get<bool>();
    }
    if (j.is_number_integer()) {
        return j.get<std::int64_t>();
    }
    throw InvalidArgument(fmt::format("check '{}' needs a boolean or integer value", check_id));
}

nlohmann::json value_to_json(const CheckValue& value)
{
    if (const auto* b = std::get_if<bool>(&value)) {
        return *b;
    }
    return std::get<std::int64_t>(value);
}

void validate_value(std::string_view check_id, const CheckValue& value)
{
    const auto* spec = find_check(check_id);
    if (!spec) {
        throw InvalidArgument(fmt::format("unknown check_id '{}'", check_id));
    }
    if (!type_matches(spec->type, value)) {
        throw InvalidArgument(fmt::format("check '{}' has the wrong value type", check_id));
    }
    if (const auto* n = std::get_if<std::int64_t>(&value); n && *n < 0) {
        throw InvalidArgument(fmt::format("check '{}' must be >= 0", check_id));
    }
}

std::string_view comparator_text(Comparator c)
{
    switch (c) {
    case Comparator::eq: return "=";
    case Comparator::le: return "<=";
    case Comparator::ge: return ">=";
    }
    return "?";
}

Comparator parse_comparator(std::string_view text)
{
    if (text == "=" || text == "==" || text == "eq") return Comparator::eq;
    if (text == "<=" || text == "le") return Comparator::le;
    if (text == ">=" || text == "ge") return Comparator::ge;
    throw InvalidArgument(fmt::format("unknown comparator '{}'", text));
}

} // namespace

void PostureReport::validate() const
{
    for (const auto& [id, value] : checks) {
        validate_value(id, value);
    }
}

void to_json(nlohmann::json& j, const PostureReport& report)
{
    nlohmann::json checks = nlohmann::json::object();
    for (const auto& [id, value] : report.checks) {
        checks[id] = value_to_json(value);
    }
    j = nlohmann::json{{"device", report.device}, {"checks", checks}, {"collected_at", report.collected_at}};
}

void from_json(const nlohmann::json& j, PostureReport& report)
{
    report.device = required<model::DeviceDescriptor>(j, "device");
    report.collected_at = optional_field<Millis>(j, "collected_at").value_or(0);
    report.checks.clear();
    const auto checks = required<nlohmann::json>(j, "checks");
    if (!checks.is_object()) {
        throw InvalidArgument("'checks' must be an object");
    }
    for (const auto& [id, value] : checks.items()) {
        report.checks.emplace(id, value_from_json(value, id));
    }
    report.validate();
}

bool Requirement::satisfied_by(const CheckValue& value) const
{
    if (value.index() != threshold.index()) {
        return false;
    }
    if (const auto* b = std::get_if<bool>(&value)) {
        return *b == std::get<bool>(threshold);
    }
    const auto v = std::get<std::int64_t>(value);
    const auto t = std::get<std::int64_t>(threshold);
    switch (comparator) {
    case Comparator::eq: return v == t;
    case Comparator::le: return v <= t;
    case Comparator::ge: return v >= t;
    }
    return false;
}

void PosturePolicy::validate() const
{
    if (requirements.empty()) {
        throw InvalidArgument("posture policy has no requirements");
    }
    if (!(critical_threshold >= 0.0 && critical_threshold <= 10.0)) {
        throw InvalidArgument("critical_threshold must lie in [0, 10]");
    }
    std::set<std::string> ids;
    std::set<std::pair<std::string, Severity>> per_severity;
    for (const auto& req : requirements) {
        if (req.id.empty()) {
            throw InvalidArgument("posture requirement needs an id");
        }
        if (req.id == kCriticalVulnId) {
            throw InvalidArgument(fmt::format("requirement id '{}' is reserved", kCriticalVulnId));
        }
        if (!ids.insert(req.id).second) {
            throw InvalidArgument(fmt::format("duplicate requirement id '{}'", req.id));
        }
        validate_value(req.check_id, req.threshold);
        if (std::holds_alternative<bool>(req.threshold) && req.comparator != Comparator::eq) {
            throw InvalidArgument(fmt::format("boolean check '{}' only supports '='", req.check_id));
        }
        if (!per_severity.emplace(req.check_id, req.severity).second) {
            throw InvalidArgument(fmt::format("duplicate check_id '{}' within one severity", req.check_id));
        }
    }
}

void to_json(nlohmann::json& j, const PosturePolicy& policy)
{
    nlohmann::json reqs = nlohmann::json::array();
    for (const auto& r : policy.requirements) {
        reqs.push_back({
            {"id", r.id},
            {"check", r.check_id},
            {"op", comparator_text(r.comparator)},
            {"value", value_to_json(r.threshold)},
            {"severity", r.severity == Severity::mandatory ? "mandatory" : "advisory"},
            {"instruction", r.instruction},
        });
    }
    j = nlohmann::json{{"critical_threshold", policy.critical_threshold}, {"requirements", reqs}};
}

void from_json(const nlohmann::json& j, PosturePolicy& policy)
{
    policy.critical_threshold = optional_field<double>(j, "critical_threshold").value_or(7.0);
    policy.requirements.clear();
    for (const auto& r : required<nlohmann::json>(j, "requirements")) {
        Requirement req;
        req.check_id = required<std::string>(r, "check");
        req.id = optional_field<std::string>(r, "id").value_or(req.check_id);
        req.comparator = parse_comparator(optional_field<std::string>(r, "op").value_or("="));
        req.threshold = value_from_json(required<nlohmann::json>(r, "value"), req.check_id);
        const auto severity = optional_field<std::string>(r, "severity").value_or("mandatory");
        if (severity == "mandatory") {
            req.severity = Severity::mandatory;
        } else if (severity == "advisory") {
            req.severity = Severity::advisory;
        } else {
            throw InvalidArgument(fmt::format("unknown severity '{}'", severity));
        }
        req.instruction = optional_field<std::string>(r, "instruction")
                              .value_or(fmt::format("Bring {} to {} {}", req.check_id, comparator_text(req.comparator),
                                                    to_string(req.threshold)));
        policy.requirements.push_back(std::move(req));
    }
    policy.validate();
}

std::string_view to_string(PostureStatus status)
{
    switch (status) {
    case PostureStatus::compliant: return "compliant";
    case PostureStatus::non_compliant: return "non-compliant";
    case PostureStatus::unknown: return "unknown";
    }
    return "?";
}

void to_json(nlohmann::json& j, const PostureVerdict& verdict)
{
    nlohmann::json items = nlohmann::json::array();
    for (const auto& item : verdict.remediation) {
        items.push_back({{"requirement_id", item.requirement_id},
                         {"check_id", item.check_id},
                         {"instruction", item.instruction}});
    }
    j = nlohmann::json{{"status", to_string(verdict.status)}, {"failed", verdict.failed}, {"remediation", items}};
}

PostureVerdict evaluate_posture(const PostureReport* report, const PosturePolicy& policy)
{
    if (policy.requirements.empty()) {
        throw InvalidArgument("posture policy has no requirements");
    }
    PostureVerdict verdict;
    if (!report) {
        verdict.status = PostureStatus::unknown;
        return verdict;
    }
    report->validate();
    bool mandatory_failed = false;
    for (const auto& req : policy.requirements) {
        const auto it = report->checks.find(req.check_id);
        if (it != report->checks.end() && req.satisfied_by(it->second)) {
            continue;
        }
        verdict.failed.push_back(req.id);
        if (req.severity == Severity::mandatory) {
            mandatory_failed = true;
            verdict.remediation.push_back({req.id, req.check_id, req.instruction});
        }
    }
    verdict.status = mandatory_failed ? PostureStatus::non_compliant : PostureStatus::compliant;
    return verdict;
}

void ScanReport::validate() const
{
    for (const auto& f : findings) {
        if (!(f.severity >= 0.0 && f.severity <= 10.0)) {
            throw InvalidArgument(fmt::format("finding '{}' severity {} outside [0, 10]", f.vuln_id, f.severity));
        }
    }
}

void to_json(nlohmann::json& j, const ScanReport& scan)
{
    nlohmann::json findings = nlohmann::json::array();
    for (const auto& f : scan.findings) {
        findings.push_back({{"vuln_id", f.vuln_id}, {"severity", f.severity}});
    }
    j = nlohmann::json{{"mac", scan.mac}, {"findings", findings}, {"scanned_at", scan.scanned_at}};
}

void from_json(const nlohmann::json& j, ScanReport& scan)
{
    scan.mac = required<model::MacAddress>(j, "mac");
    scan.scanned_at = optional_field<Millis>(j, "scanned_at").value_or(0);
    scan.findings.clear();
    for (const auto& f : optional_field<nlohmann::json>(j, "findings").value_or(nlohmann::json::array())) {
        scan.findings.push_back({required<std::string>(f, "vuln_id"), required<double>(f, "severity")});
    }
    scan.validate();
}

} // namespace nac::posture
