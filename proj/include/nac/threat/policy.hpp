#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "nac/model/address.hpp"
#include "nac/threat/event.hpp"

namespace nac::threat {

enum class CtcKind { quarantine, role_change, terminate, disable, rate_limit };

std::string_view to_string(CtcKind kind);
std::optional<CtcKind> parse_ctc_kind(std::string_view text);

struct CtcAction {
    CtcKind kind = CtcKind::quarantine;
    /// role_change only; lowercase application tags.
    std::vector<std::string> deny_applications;
    /// rate_limit only.
    std::uint32_t kbps = 0;

    void validate() const;
    bool operator==(const CtcAction&) const = default;
};

void to_json(nlohmann::json& j, const CtcAction& action);
void from_json(const nlohmann::json& j, CtcAction& action);

/// Every present field must match. `port` matches either endpoint;
/// `category` compares case-insensitively; `message_contains` is a plain
/// substring test.
struct ThreatMatch {
    std::optional<std::string> category;
    std::optional<Proto> protocol;
    std::optional<std::uint32_t> sid;
    std::optional<model::Ipv4Prefix> src;
    std::optional<model::Ipv4Prefix> dst;
    std::optional<std::uint16_t> port;
    std::optional<int> max_priority;
    std::optional<std::string> message_contains;

    bool empty() const;
    bool matches(const ThreatEvent& evt) const;
};

struct ThreatClause {
    ThreatMatch match;
    CtcAction action;
};

struct ThreatPolicy {
    std::vector<ThreatClause> clauses;

    /// Throws InvalidArgument naming the clause index on the first problem.
    void validate() const;
};

/// {"clauses": [{"match": {...}, "action": {"type": ..., ...}}, ...]}
void to_json(nlohmann::json& j, const ThreatPolicy& policy);
void from_json(const nlohmann::json& j, ThreatPolicy& policy);

struct Selection {
    std::size_t clause_index = 0;
    CtcAction action;
};

/// First clause whose every specified field matches.
std::optional<Selection> select_action(const ThreatEvent& evt, const ThreatPolicy& policy);

} // namespace nac::threat
