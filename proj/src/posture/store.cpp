#include "nac/posture/store.hpp"

#include "nac/model/errors.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

namespace nac::posture {

namespace {

/// Picks a value meeting every requirement in `reqs`, starting from
/// `current`. Returns nullopt when the requirements contradict each other.
std::optional<CheckValue> satisfying_value(const std::vector<const Requirement*>& reqs, const CheckValue& current)
{
    if (reqs.empty()) {
        return std::nullopt;
    }
    if (std::holds_alternative<bool>(reqs.front()->threshold)) {
        const bool want = std::get<bool>(reqs.front()->threshold);
        for (const auto* r : reqs) {
            if (std::get<bool>(r->threshold) != want) {
                return std::nullopt;
            }
        }
        return want;
    }
    std::int64_t lo = 0;
    std::int64_t hi = std::numeric_limits<std::int64_t>::max();
    for (const auto* r : reqs) {
        const auto t = std::get<std::int64_t>(r->threshold);
        switch (r->comparator) {
        case Comparator::eq: lo = std::max(lo, t); hi = std::min(hi, t); break;
        case Comparator::le: hi = std::min(hi, t); break;
        case Comparator::ge: lo = std::max(lo, t); break;
        }
    }
    if (lo > hi) {
        return std::nullopt;
    }
    const auto* cur = std::get_if<std::int64_t>(&current);
    const std::int64_t base = cur ? *cur : lo;
    return std::clamp(base, lo, hi);
}

} // namespace

void PostureStore::put_report(const PostureReport& report)
{
    report.validate();
    entries_[report.device.mac].report = report;
}

const PostureReport* PostureStore::report(const model::MacAddress& mac) const
{
    const auto it = entries_.find(mac);
    if (it == entries_.end() || !it->second.report) {
        return nullptr;
    }
    return &*it->second.report;
}

PostureDelta PostureStore::ingest_scan(const ScanReport& scan, const PosturePolicy& policy)
{
    scan.validate();
    auto& entry = entries_[scan.mac];
    PostureDelta delta{scan.mac, entry.critical, entry.critical, false};
    if (entry.last_scan_at && scan.scanned_at < *entry.last_scan_at) {
        delta.stale = true;
        return delta;
    }
    entry.last_scan_at = scan.scanned_at;
    entry.critical = std::any_of(scan.findings.begin(), scan.findings.end(),
                                 [&](const ScanFinding& f) { return f.severity >= policy.critical_threshold; });
    delta.flagged_after = entry.critical;
    return delta;
}

bool PostureStore::critical_flag(const model::MacAddress& mac) const
{
    const auto it = entries_.find(mac);
    return it != entries_.end() && it->second.critical;
}

std::string PostureStore::resolve_check(std::string_view check, const PosturePolicy& policy)
{
    if (check == kCriticalVulnId || find_check(check)) {
        return std::string(check);
    }
    for (const auto& req : policy.requirements) {
        if (req.id == check) {
            return req.check_id;
        }
    }
    throw InvalidArgument(fmt::format("unknown check or requirement '{}'", check));
}

RemediationResult PostureStore::apply_remediation(const model::MacAddress& mac, std::string_view check,
                                                  const PosturePolicy& policy)
{
    const auto it = entries_.find(mac);
    if (it == entries_.end() || !it->second.report) {
        throw NotFound(fmt::format("no posture report stored for {}", mac.to_string()));
    }
    auto& entry = it->second;
    const auto check_id = resolve_check(check, policy);

    if (check_id == kCriticalVulnId) {
        const bool was = entry.critical;
        entry.critical = false;
        return {*entry.report, was};
    }

    std::vector<const Requirement*> all;
    std::vector<const Requirement*> mandatory;
    for (const auto& req : policy.requirements) {
        if (req.check_id == check_id) {
            all.push_back(&req);
            if (req.severity == Severity::mandatory) {
                mandatory.push_back(&req);
            }
        }
    }
    auto& report = *entry.report;
    const auto current = report.checks.find(check_id);
    const bool failing = current == report.checks.end() ||
                         std::any_of(all.begin(), all.end(), [&](const Requirement* r) {
                             return !r->satisfied_by(current->second);
                         });
    if (all.empty() || !failing) {
        return {report, false};
    }
    const CheckValue seed = current != report.checks.end() ? current->second : all.front()->threshold;
    auto fixed = satisfying_value(all, seed);
    if (!fixed) {
        fixed = satisfying_value(mandatory, seed);
    }
    if (!fixed) {
        throw ConfigError(fmt::format("posture policy requirements on '{}' cannot all be met", check_id));
    }
    report.checks[check_id] = *fixed;
    return {report, true};
}

PostureVerdict PostureStore::verdict(const model::MacAddress& mac, const PosturePolicy& policy) const
{
    return verdict_for(report(mac), mac, policy);
}

PostureVerdict PostureStore::verdict_for(const PostureReport* stored, const model::MacAddress& mac,
                                         const PosturePolicy& policy) const
{
    auto verdict = evaluate_posture(stored, policy);
    if (stored && critical_flag(mac)) {
        verdict.failed.emplace_back(kCriticalVulnId);
        verdict.remediation.push_back({std::string(kCriticalVulnId), std::string(kCriticalVulnId),
                                       "Patch the critical vulnerabilities reported by the last scan"});
        verdict.status = PostureStatus::non_compliant;
    }
    return verdict;
}

} // namespace nac::posture
