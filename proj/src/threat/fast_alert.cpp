#include "nac/threat/fast_alert.hpp"

#include <charconv>
#include <chrono>
#include <cctype>
#include <optional>

#include <fmt/format.h>

namespace nac::threat {

AlertParseError::AlertParseError(std::size_t column, const std::string& message)
    : InvalidArgument(fmt::format("column {}: {}", column, message)), column_(column), detail_(message)
{
}

namespace {

class Cursor {
public:
    Cursor(std::string_view text, std::size_t base = 0) : text_(text), base_(base) {}

    std::size_t column() const { return base_ + pos_ + 1; }
    bool done() const { return pos_ >= text_.size(); }
    char peek() const { return done() ? '\0' : text_[pos_]; }
    std::string_view rest() const { return text_.substr(pos_); }

    [[noreturn]] void fail(const std::string& message) const { throw AlertParseError(column(), message); }

    std::size_t skip_spaces()
    {
        std::size_t n = 0;
        while (!done() && (text_[pos_] == ' ' || text_[pos_] == '\t')) {
            ++pos_;
            ++n;
        }
        return n;
    }

    void require_spaces()
    {
        if (skip_spaces() == 0) {
            fail("expected whitespace");
        }
    }

    bool try_literal(std::string_view lit)
    {
        if (text_.substr(pos_, lit.size()) == lit) {
            pos_ += lit.size();
            return true;
        }
        return false;
    }

    void literal(std::string_view lit)
    {
        if (!try_literal(lit)) {
            fail(fmt::format("expected '{}'", lit));
        }
    }

    template <typename T>
    T number(std::string_view what, std::size_t min_digits = 1, std::size_t max_digits = 10)
    {
        std::size_t end = pos_;
        while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end]))) {
            ++end;
        }
        const auto len = end - pos_;
        if (len < min_digits || len > max_digits) {
            fail(fmt::format("expected {}", what));
        }
        T value{};
        const auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + end, value);
        if (ec != std::errc{}) {
            fail(fmt::format("{} out of range", what));
        }
        (void)ptr;
        pos_ = end;
        return value;
    }

    /// Text up to (not including) `stop`, trailing spaces trimmed.
    std::string_view until(std::string_view stop, std::string_view what)
    {
        const auto at = text_.find(stop, pos_);
        if (at == std::string_view::npos) {
            fail(fmt::format("unterminated {}", what));
        }
        auto out = text_.substr(pos_, at - pos_);
        pos_ = at;
        while (!out.empty() && (out.back() == ' ' || out.back() == '\t')) {
            out.remove_suffix(1);
        }
        return out;
    }

    std::string_view token()
    {
        const auto start = pos_;
        while (!done() && text_[pos_] != ' ' && text_[pos_] != '\t') {
            ++pos_;
        }
        return text_.substr(start, pos_ - start);
    }

    std::size_t pos() const { return pos_; }
    void seek(std::size_t p) { pos_ = p; }

private:
    std::string_view text_;
    std::size_t base_;
    std::size_t pos_ = 0;
};

Millis civil_to_millis(int year, unsigned month, unsigned day, int hh, int mm, int ss, int micros, const Cursor& cur)
{
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
    if (!ymd.ok()) {
        cur.fail(fmt::format("invalid date {:02}/{:02} in year {}", month, day, year));
    }
    if (hh > 23 || mm > 59 || ss > 59) {
        cur.fail("invalid time of day");
    }
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return ((static_cast<Millis>(days) * 24 + hh) * 60 + mm) * 60'000 + ss * 1000 + micros / 1000;
}

Millis read_timestamp(Cursor& cur, int year)
{
    const auto month = cur.number<unsigned>("month", 2, 2);
    cur.literal("/");
    const auto day = cur.number<unsigned>("day", 2, 2);
    cur.literal("-");
    const auto hh = cur.number<int>("hour", 2, 2);
    cur.literal(":");
    const auto mm = cur.number<int>("minute", 2, 2);
    cur.literal(":");
    const auto ss = cur.number<int>("second", 2, 2);
    cur.literal(".");
    const auto micros = cur.number<int>("microseconds", 6, 6);
    return civil_to_millis(year, month, day, hh, mm, ss, micros, cur);
}

Endpoint read_endpoint(Cursor& cur, Proto proto, std::string_view what)
{
    const auto start_col = cur.column();
    auto tok = cur.token();
    if (tok.empty()) {
        cur.fail(fmt::format("expected {} address", what));
    }
    Endpoint ep;
    const auto colon = tok.find(':');
    const auto addr_text = tok.substr(0, colon);
    const auto addr = model::Ipv4Address::try_parse(addr_text);
    if (!addr) {
        throw AlertParseError(start_col, fmt::format("malformed {} address '{}'", what, addr_text));
    }
    ep.addr = *addr;
    if (colon != std::string_view::npos) {
        const auto port_col = start_col + colon + 1;
        if (proto == Proto::icmp) {
            throw AlertParseError(port_col - 1, "icmp endpoints carry no ports");
        }
        const auto port_text = tok.substr(colon + 1);
        unsigned port = 0;
        const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
        if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port > 65535 || port_text.empty()) {
            throw AlertParseError(port_col, fmt::format("malformed {} port '{}'", what, port_text));
        }
        ep.port = static_cast<std::uint16_t>(port);
    }
    return ep;
}

/// Everything after the timestamp: " [**] [g:s:r] ... -> dst".
void read_body(Cursor& cur, ThreatEvent& evt)
{
    cur.skip_spaces();
    cur.literal("[**]");
    cur.require_spaces();
    cur.literal("[");
    evt.sig.gid = cur.number<std::uint32_t>("gid");
    cur.literal(":");
    evt.sig.sid = cur.number<std::uint32_t>("sid");
    cur.literal(":");
    evt.sig.rev = cur.number<std::uint32_t>("rev");
    cur.literal("]");
    cur.require_spaces();
    const auto msg_col = cur.column();
    evt.message = std::string(cur.until("[**]", "message"));
    if (evt.message.empty()) {
        throw AlertParseError(msg_col, "empty message");
    }
    cur.literal("[**]");
    cur.require_spaces();
    if (cur.try_literal("[Classification:")) {
        cur.skip_spaces();
        evt.category = std::string(cur.until("]", "classification"));
        cur.literal("]");
        cur.require_spaces();
    }
    if (!cur.try_literal("[Priority:")) {
        cur.fail("expected '[Priority:'");
    }
    cur.skip_spaces();
    evt.priority = cur.number<int>("priority", 1, 3);
    if (evt.priority < 1) {
        cur.fail("priority must be >= 1");
    }
    cur.literal("]");
    cur.require_spaces();
    cur.literal("{");
    const auto proto_col = cur.column();
    const auto proto_text = cur.until("}", "protocol");
    const auto proto = parse_proto(proto_text);
    if (!proto || proto_text != to_string(*proto)) {
        throw AlertParseError(proto_col, fmt::format("unknown protocol '{}'", proto_text));
    }
    evt.protocol = *proto;
    cur.literal("}");
    cur.require_spaces();
    evt.src = read_endpoint(cur, evt.protocol, "source");
    cur.require_spaces();
    cur.literal("->");
    cur.require_spaces();
    evt.dst = read_endpoint(cur, evt.protocol, "destination");
    cur.skip_spaces();
    if (!cur.done()) {
        cur.fail("trailing text after destination");
    }
}

std::string_view trim_line(std::string_view line)
{
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) {
        line.remove_suffix(1);
    }
    return line;
}

std::string endpoint_text(const Endpoint& ep)
{
    return ep.port ? fmt::format("{}:{}", ep.addr.to_string(), *ep.port) : ep.addr.to_string();
}

} // namespace

Millis parse_alert_timestamp(std::string_view text, int year)
{
    Cursor cur(text);
    const auto t = read_timestamp(cur, year);
    if (!cur.done()) {
        cur.fail("trailing text after timestamp");
    }
    return t;
}

std::string format_alert_timestamp(Millis t, int year)
{
    using namespace std::chrono;
    const auto start = sys_days{std::chrono::year{year} / January / 1}.time_since_epoch().count() * 86'400'000LL;
    const auto end = sys_days{std::chrono::year{year + 1} / January / 1}.time_since_epoch().count() * 86'400'000LL;
    if (t < start || t >= end) {
        throw InvalidArgument(fmt::format("time {} lies outside year {}", t, year));
    }
    const auto day_count = t / 86'400'000;
    const year_month_day ymd{sys_days{days{day_count}}};
    auto rem = t - day_count * 86'400'000;
    const auto hh = rem / 3'600'000;
    rem %= 3'600'000;
    const auto mm = rem / 60'000;
    rem %= 60'000;
    const auto ss = rem / 1000;
    const auto ms = rem % 1000;
    return fmt::format("{:02}/{:02}-{:02}:{:02}:{:02}.{:03}000", static_cast<unsigned>(ymd.month()),
                       static_cast<unsigned>(ymd.day()), hh, mm, ss, ms);
}

ThreatEvent parse_fast_alert(std::string_view line, const AlertParseOptions& options)
{
    line = trim_line(line);
    Cursor cur(line);
    if (line.empty()) {
        cur.fail("empty alert line");
    }
    ThreatEvent evt;
    evt.observed_at = read_timestamp(cur, options.year);
    if (cur.skip_spaces() == 0) {
        cur.fail("expected whitespace");
    }
    read_body(cur, evt);
    evt.dedup_key = compute_dedup_key(evt, options.dedup_window);
    return evt;
}

std::string format_fast_alert(const ThreatEvent& evt, int year)
{
    std::string classification;
    if (!evt.category.empty()) {
        classification = fmt::format("[Classification: {}] ", evt.category);
    }
    return fmt::format("{}  [**] [{}:{}:{}] {} [**] {}[Priority: {}] {{{}}} {} -> {}",
                       format_alert_timestamp(evt.observed_at, year), evt.sig.gid, evt.sig.sid, evt.sig.rev,
                       evt.message, classification, evt.priority, to_string(evt.protocol), endpoint_text(evt.src),
                       endpoint_text(evt.dst));
}

SyslogMessage parse_syslog(std::string_view datagram)
{
    datagram = trim_line(datagram);
    Cursor cur(datagram);
    SyslogMessage msg;
    cur.literal("<");
    msg.pri = cur.number<int>("PRI", 1, 3);
    if (msg.pri > 191) {
        cur.fail("PRI out of range");
    }
    cur.literal(">");
    const auto ts_start = cur.pos();
    const auto first = cur.token();
    if (first.empty()) {
        cur.fail("expected timestamp");
    }
    // BSD timestamps are three tokens ("Jan 11 13:04:31"); RFC 3339 is one.
    if (first.size() == 3 && std::isalpha(static_cast<unsigned char>(first[0]))) {
        cur.require_spaces();
        if (cur.token().empty()) cur.fail("expected day of month");
        cur.require_spaces();
        if (cur.token().empty()) cur.fail("expected time of day");
    }
    msg.timestamp = std::string(datagram.substr(ts_start, cur.pos() - ts_start));
    cur.require_spaces();
    msg.host = std::string(cur.token());
    if (msg.host.empty()) {
        cur.fail("expected host");
    }
    cur.require_spaces();
    const auto tag_col = cur.column();
    auto tag = cur.token();
    if (tag.empty() || tag.back() != ':') {
        throw AlertParseError(tag_col, "expected 'snort:' tag");
    }
    tag.remove_suffix(1);
    // "snort[1234]" carries a pid.
    const auto bracket = tag.find('[');
    if (tag.substr(0, bracket) != "snort") {
        throw AlertParseError(tag_col, fmt::format("unexpected syslog tag '{}'", tag));
    }
    msg.tag = std::string(tag);
    cur.skip_spaces();
    msg.payload = std::string(cur.rest());
    if (msg.payload.empty()) {
        cur.fail("empty payload");
    }
    return msg;
}

ThreatEvent parse_syslog_alert(std::string_view datagram, Millis received_at, const AlertParseOptions& options)
{
    const auto msg = parse_syslog(datagram);
    const auto offset = datagram.find(msg.payload);
    if (!msg.payload.empty() && std::isdigit(static_cast<unsigned char>(msg.payload[0]))) {
        try {
            return parse_fast_alert(msg.payload, options);
        } catch (const AlertParseError& e) {
            throw AlertParseError(offset + e.column(), e.detail());
        }
    }
    Cursor cur(msg.payload, offset);
    ThreatEvent evt;
    evt.observed_at = received_at;
    read_body(cur, evt);
    evt.dedup_key = compute_dedup_key(evt, options.dedup_window);
    return evt;
}

} // namespace nac::threat
