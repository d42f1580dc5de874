#pragma once

#include <string>
#include <string_view>

#include "nac/model/errors.hpp"
#include "nac/threat/event.hpp"

namespace nac::threat {

/// Grammar mismatch in an alert line. `column` is 1-based.
class AlertParseError : public InvalidArgument {
public:
    AlertParseError(std::size_t column, const std::string& message);
    std::size_t column() const { return column_; }
    const std::string& detail() const { return detail_; }

private:
    std::size_t column_;
    std::string detail_;
};

struct AlertParseOptions {
    /// Fast-alert timestamps carry no year; they are placed in this one.
    int year = 1970;
    Millis dedup_window = kDefaultDedupWindow;
};

/// Parses one fast-alert line:
///
///   MM/DD-HH:MM:SS.ffffff  [**] [GID:SID:REV] MSG [**] [Classification: TEXT] [Priority: N] {PROTO} SRC[:SPORT] -> DST[:DPORT]
///
/// Any run of spaces is accepted between tokens. The classification block
/// may be omitted (category ""). ICMP endpoints carry no ports.
ThreatEvent parse_fast_alert(std::string_view line, const AlertParseOptions& options = {});

/// Renders an event in the fast-alert grammar. Sub-millisecond digits are
/// written as zeros.
std::string format_fast_alert(const ThreatEvent& evt, int year = 1970);

/// Timestamp helpers shared with the simulator.
Millis parse_alert_timestamp(std::string_view text, int year);
std::string format_alert_timestamp(Millis t, int year);

struct SyslogMessage {
    int pri = 0;
    std::string timestamp;
    std::string host;
    std::string tag;
    /// Body after "snort:" with leading spaces removed.
    std::string payload;
};

/// `<PRI>TIMESTAMP HOST snort: PAYLOAD`. TIMESTAMP is either the BSD form
/// ("Jan 11 13:04:31") or a single RFC 3339 token.
SyslogMessage parse_syslog(std::string_view datagram);

/// Extracts the fast-alert event from a syslog payload. Payloads produced by
/// syslog output plugins lack the leading timestamp; in that case the
/// observation time is `received_at`.
ThreatEvent parse_syslog_alert(std::string_view datagram, Millis received_at, const AlertParseOptions& options = {});

} // namespace nac::threat
