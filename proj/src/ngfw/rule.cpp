#include "nac/ngfw/rule.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <fmt/format.h>

namespace nac::ngfw {

namespace {

std::string lower(std::string_view text)
{
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::vector<std::string_view> split_ws(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const auto start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

bool has_alpha(std::string_view s)
{
    return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isalpha(c); });
}

std::optional<AddressField> parse_address_field(std::string_view token)
{
    if (token == "*") {
        return Wildcard{};
    }
    if (auto prefix = model::Ipv4Prefix::try_parse(token)) {
        return *prefix;
    }
    auto name = lower(token);
    if (!name.empty() && name.back() == '.') {
        name.pop_back();
    }
    if (has_alpha(name) && is_valid_fqdn(name)) {
        return Fqdn{name};
    }
    return std::nullopt;
}

} // namespace

std::string_view to_string(Action action) { return action == Action::permit ? "permit" : "deny"; }

std::optional<Action> parse_action(std::string_view text)
{
    const auto t = lower(text);
    if (t == "permit") return Action::permit;
    if (t == "deny") return Action::deny;
    return std::nullopt;
}

std::string_view to_string(Protocol protocol)
{
    switch (protocol) {
    case Protocol::tcp: return "tcp";
    case Protocol::udp: return "udp";
    case Protocol::icmp: return "icmp";
    case Protocol::http: return "http";
    case Protocol::any: return "any";
    }
    return "?";
}

std::optional<Protocol> parse_protocol(std::string_view text)
{
    const auto t = lower(text);
    if (t == "tcp") return Protocol::tcp;
    if (t == "udp") return Protocol::udp;
    if (t == "icmp") return Protocol::icmp;
    if (t == "http") return Protocol::http;
    if (t == "any") return Protocol::any;
    return std::nullopt;
}

std::string to_string(const AddressField& field)
{
    if (std::holds_alternative<Wildcard>(field)) return "*";
    if (const auto* p = std::get_if<model::Ipv4Prefix>(&field)) return p->to_string();
    return std::get<Fqdn>(field).name;
}

bool is_valid_fqdn(std::string_view name)
{
    if (name.empty() || name.size() > 253) {
        return false;
    }
    std::size_t labels = 0;
    std::string_view last;
    std::size_t start = 0;
    while (true) {
        const auto dot = name.find('.', start);
        const auto label = name.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start);
        if (label.empty() || label.size() > 63 || label.front() == '-' || label.back() == '-') {
            return false;
        }
        for (unsigned char c : label) {
            if (!(std::isalnum(c) || c == '-')) {
                return false;
            }
        }
        ++labels;
        last = label;
        if (dot == std::string_view::npos) break;
        start = dot + 1;
    }
    const bool numeric_tld = std::all_of(last.begin(), last.end(), [](unsigned char c) { return std::isdigit(c); });
    return labels >= 2 && !numeric_tld;
}

bool FirewallRule::uses_fqdn() const
{
    return std::holds_alternative<Fqdn>(src) || std::holds_alternative<Fqdn>(dst);
}

bool FirewallRule::operator==(const FirewallRule& other) const
{
    return nac_user == other.nac_user && nac_device == other.nac_device && src == other.src && dst == other.dst &&
           protocol == other.protocol && application == other.application && action == other.action &&
           rule_id == other.rule_id;
}

void RuleSet::append(FirewallRule rule)
{
    rule.rule_id = rules.size() + 1;
    rules.push_back(std::move(rule));
}

RuleSet RuleSet::concat(const RuleSet& head, const RuleSet& tail)
{
    RuleSet out;
    for (const auto& r : head.rules) out.append(r);
    for (const auto& r : tail.rules) out.append(r);
    return out;
}

bool RuleSet::uses_fqdn() const
{
    return std::any_of(rules.begin(), rules.end(), [](const FirewallRule& r) { return r.uses_fqdn(); });
}

std::string to_string(const Diagnostic& diag)
{
    return fmt::format("line {}: {}: {}", diag.line, diag.field, diag.message);
}

namespace {

std::string summarize(const std::vector<Diagnostic>& diagnostics)
{
    std::string out = "firewall rule document has errors";
    for (const auto& d : diagnostics) {
        out += "\n  " + to_string(d);
    }
    return out;
}

} // namespace

RuleParseError::RuleParseError(std::vector<Diagnostic> diagnostics)
    : InvalidArgument(summarize(diagnostics))
    , diagnostics_(std::move(diagnostics))
{
}

RuleSet parse_rules(std::string_view document)
{
    RuleSet out;
    std::vector<Diagnostic> errors;
    int lineno = 0;
    std::size_t pos = 0;
    while (pos <= document.size()) {
        const auto eol = document.find('\n', pos);
        auto line = document.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? document.size() + 1 : eol + 1;
        ++lineno;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        const auto cols = split_ws(line);
        if (cols.empty()) {
            continue;
        }
        if (cols.size() != 7) {
            errors.push_back({lineno, "line", fmt::format("expected 7 columns, found {}", cols.size())});
            continue;
        }

        FirewallRule rule;
        rule.line = lineno;
        bool ok = true;
        auto fail = [&](std::string field, std::string message) {
            errors.push_back({lineno, std::move(field), std::move(message)});
            ok = false;
        };

        if (cols[0] != "*") {
            rule.nac_user = lower(cols[0]);
        }
        if (cols[1] != "*") {
            if (auto cls = model::parse_device_class(cols[1])) {
                rule.nac_device = *cls;
            } else {
                fail("nac_device", fmt::format("unknown device class '{}'", cols[1]));
            }
        }
        if (auto src = parse_address_field(cols[2])) {
            rule.src = *src;
        } else {
            fail("src", fmt::format("malformed address, prefix or FQDN '{}'", cols[2]));
        }
        if (auto dst = parse_address_field(cols[3])) {
            rule.dst = *dst;
        } else {
            fail("dst", fmt::format("malformed address, prefix or FQDN '{}'", cols[3]));
        }
        if (auto proto = parse_protocol(cols[4])) {
            rule.protocol = *proto;
        } else {
            fail("protocol", fmt::format("unknown protocol '{}'", cols[4]));
        }
        if (cols[5] != "*") {
            rule.application = lower(cols[5]);
        }
        if (auto action = parse_action(cols[6])) {
            rule.action = *action;
        } else {
            fail("action", fmt::format("unknown action '{}' (permit|deny)", cols[6]));
        }
        if (ok) {
            out.append(std::move(rule));
        }
    }
    if (!errors.empty()) {
        throw RuleParseError(std::move(errors));
    }
    return out;
}

std::string format_rule(const FirewallRule& rule)
{
    return fmt::format("{} {} {} {} {} {} {}", rule.nac_user.value_or("*"),
                       rule.nac_device ? std::string(model::to_string(*rule.nac_device)) : std::string("*"),
                       to_string(rule.src), to_string(rule.dst), to_string(rule.protocol),
                       rule.application.value_or("*"), to_string(rule.action));
}

std::string format_rules(const RuleSet& rules)
{
    std::string out;
    for (const auto& r : rules.rules) {
        out += format_rule(r);
        out += '\n';
    }
    return out;
}

} // namespace nac::ngfw
