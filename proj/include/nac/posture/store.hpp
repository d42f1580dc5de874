#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "nac/posture/posture.hpp"

namespace nac::posture {

/// Result of folding a scan report into the store.
struct PostureDelta {
    model::MacAddress mac;
    bool flagged_before = false;
    bool flagged_after = false;
    /// Older than the last scan already held; ignored.
    bool stale = false;

    bool changed() const { return flagged_before != flagged_after; }
};

struct RemediationResult {
    PostureReport report;
    /// False when the check was not failing: nothing was modified.
    bool changed = false;
};

/// Latest posture report and vulnerability-scan state per device.
/// Single writer; the engine serializes access.
class PostureStore {
public:
    void put_report(const PostureReport& report);
    const PostureReport* report(const model::MacAddress& mac) const;

    /// Any finding at or above the policy's critical threshold flags the
    /// device until a newer scan without such findings arrives.
    PostureDelta ingest_scan(const ScanReport& scan, const PosturePolicy& policy);
    bool critical_flag(const model::MacAddress& mac) const;

    /// Simulated fix: sets the stored value of `check` (a check id, or a
    /// requirement id naming one) to a policy-satisfying value. Throws
    /// NotFound when no report is stored and InvalidArgument for an unknown
    /// check.
    RemediationResult apply_remediation(const model::MacAddress& mac, std::string_view check,
                                        const PosturePolicy& policy);

    /// Report evaluation plus the synthetic critical-vuln failure.
    PostureVerdict verdict(const model::MacAddress& mac, const PosturePolicy& policy) const;
    /// As verdict(), but judging `report` in place of the stored one.
    PostureVerdict verdict_for(const PostureReport* report, const model::MacAddress& mac,
                               const PosturePolicy& policy) const;

    /// Resolves a requirement id to its check id; passes check ids through.
    static std::string resolve_check(std::string_view check, const PosturePolicy& policy);

private:
    struct Entry {
        std::optional<PostureReport> report;
        bool critical = false;
        std::optional<Millis> last_scan_at;
    };
    std::map<model::MacAddress, Entry> entries_;
};

} // namespace nac::posture
