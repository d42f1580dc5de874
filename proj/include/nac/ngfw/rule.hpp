#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nac/model/address.hpp"
#include "nac/model/errors.hpp"
#include "nac/model/identity_types.hpp"

namespace nac::ngfw {

enum class Action { permit, deny };

std::string_view to_string(Action action);
std::optional<Action> parse_action(std::string_view text);

/// `http` is carried over TCP, so a `tcp` rule also covers http packets.
enum class Protocol { tcp, udp, icmp, http, any };

std::string_view to_string(Protocol protocol);
std::optional<Protocol> parse_protocol(std::string_view text);

/// Source or destination field: wildcard, address block, or domain name.
struct Wildcard {
    bool operator==(const Wildcard&) const = default;
};
struct Fqdn {
    std::string name; // lowercase
    bool operator==(const Fqdn&) const = default;
};
using AddressField = std::variant<Wildcard, model::Ipv4Prefix, Fqdn>;

std::string to_string(const AddressField& field);

/// RFC 1035 host-name syntax: ≥ 2 labels of [a-z0-9-], each 1..63 chars not
/// starting or ending with '-', total ≤ 253, non-numeric top-level label.
bool is_valid_fqdn(std::string_view name);

struct FirewallRule {
    /// User id or role name, lowercase; nullopt is the wildcard.
    std::optional<std::string> nac_user;
    std::optional<model::DeviceClass> nac_device;
    AddressField src = Wildcard{};
    AddressField dst = Wildcard{};
    Protocol protocol = Protocol::any;
    /// Lowercase application tag; nullopt is the wildcard.
    std::optional<std::string> application;
    Action action = Action::deny;
    /// 1-based position in the owning RuleSet.
    std::size_t rule_id = 0;
    /// Source line in the parsed document, 0 when built in code.
    int line = 0;

    bool uses_fqdn() const;
    /// Compares the rule content and position; the source line is ignored.
    bool operator==(const FirewallRule& other) const;
};

struct RuleSet {
    std::vector<FirewallRule> rules;

    /// Appends `rule`, assigning its rule_id.
    void append(FirewallRule rule);
    /// Concatenation with rule ids renumbered from 1.
    static RuleSet concat(const RuleSet& head, const RuleSet& tail);
    bool uses_fqdn() const;
    bool empty() const { return rules.empty(); }
    std::size_t size() const { return rules.size(); }

    bool operator==(const RuleSet&) const = default;
};

struct Diagnostic {
    int line = 0;
    std::string field;
    std::string message;
};

std::string to_string(const Diagnostic& diag);

class RuleParseError : public InvalidArgument {
public:
    explicit RuleParseError(std::vector<Diagnostic> diagnostics);
    const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

private:
    std::vector<Diagnostic> diagnostics_;
};

/// Parses the plain-text rule document: one rule per line with seven
/// whitespace-separated columns
///
///   NAC-user  NAC-device  source  destination  protocol  application  action
///
/// `*` is the wildcard and `#` starts a comment. Collects every error before
/// throwing RuleParseError.
RuleSet parse_rules(std::string_view document);

/// Renders a rule set back to the document format (stable, one rule per line).
std::string format_rules(const RuleSet& rules);
std::string format_rule(const FirewallRule& rule);

} // namespace nac::ngfw
