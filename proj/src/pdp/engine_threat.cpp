#include "nac/pdp/engine.hpp"

#include "engine_impl.hpp"

#include "nac/model/errors.hpp"
#include "nac/threat/correlate.hpp"

#include <algorithm>
#include <mutex>

#include <fmt/format.h>

namespace nac::pdp {

using model::LayerTag;
using nlohmann::json;
using threat::CtcKind;

namespace {

struct Plan {
    ThreatDisposition disposition = ThreatDisposition::no_match;
    std::optional<std::string> session_id;
    std::optional<threat::Selection> selection;
    std::string note;
};

bool is_open(SessionState s)
{
    return s == SessionState::active || s == SessionState::quarantined;
}

Plan plan_response(const Txn& txn, const threat::ThreatEvent& evt, const std::string& key, model::Millis window)
{
    Plan plan;
    const auto& st = txn.scratch;
    if (const auto it = st.dedup_seen.find(key); it != st.dedup_seen.end() && txn.now - it->second < window) {
        plan.disposition = ThreatDisposition::suppressed;
        plan.note = fmt::format("duplicate of alert first seen at {}", it->second);
        return plan;
    }
    plan.session_id = threat::correlate(evt, st.ip_index);
    if (!plan.session_id) {
        plan.disposition = ThreatDisposition::uncorrelated;
        plan.note = fmt::format("no live session holds {}", evt.src.addr.to_string());
        return plan;
    }
    plan.selection = threat::select_action(evt, st.policies.threat);
    if (!plan.selection) {
        plan.disposition = ThreatDisposition::no_match;
        return plan;
    }
    const auto& s = st.sessions.at(*plan.session_id);
    bool applicable = false;
    switch (plan.selection->action.kind) {
    case CtcKind::quarantine:
        applicable = s.state == SessionState::pending || s.state == SessionState::active ||
                     (s.state == SessionState::quarantined && !s.threat_hold);
        break;
    case CtcKind::role_change:
        applicable = s.state == SessionState::active;
        break;
    case CtcKind::terminate:
        applicable = true;
        break;
    case CtcKind::disable:
    case CtcKind::rate_limit:
        applicable = is_open(s.state);
        break;
    }
    plan.disposition = applicable ? ThreatDisposition::applied : ThreatDisposition::not_applicable;
    if (!applicable) {
        plan.note = fmt::format("session {} is {}", s.id, to_string(s.state));
    }
    return plan;
}

void apply_response(Txn& txn, const Session& s, const threat::CtcAction& action, const threat::ThreatEvent& evt,
                    const json& cause)
{
    const auto reason = fmt::format("threat {}:{}:{} {}", evt.sig.gid, evt.sig.sid, evt.sig.rev, evt.message);
    const auto& nac = txn.scratch.policies.nac;
    switch (action.kind) {
    case CtcKind::quarantine: {
        json set{{"role", ""},
                 {"vlan", nac.quarantine_vlan},
                 {"portal", to_string(Portal::remediation)},
                 {"threat_hold", true}};
        if (s.state == SessionState::quarantined) {
            emit_update(txn, s, reason, cause, json{{"threat_hold", true}}, {});
        } else {
            emit_transition(txn, s, SessionState::quarantined, reason, cause, std::move(set));
        }
        return;
    }
    case CtcKind::role_change: {
        auto apps = s.denied_apps;
        for (const auto& app : action.deny_applications) {
            if (std::find(apps.begin(), apps.end(), app) == apps.end()) apps.push_back(app);
        }
        Session next = s;
        next.denied_apps = apps;
        auto counter = txn.scratch.next_command;
        std::vector<enforce::EnforcementCommand> cmds;
        if (!nac.firewall_id.empty()) {
            for (auto& c : commands_for(next, SessionState::active, nac, counter)) {
                if (std::holds_alternative<enforce::InstallRuleset>(c.body)) cmds.push_back(std::move(c));
            }
            // Keep command numbering dense.
            auto seq = txn.scratch.next_command;
            for (auto& c : cmds) c.command_seq = seq++;
        }
        emit_update(txn, s, reason, cause, json{{"denied_apps", apps}}, cmds);
        return;
    }
    case CtcKind::terminate:
        emit_transition(txn, s, SessionState::terminated, reason, cause);
        return;
    case CtcKind::disable:
        emit_transition(txn, s, SessionState::disabled, reason, cause);
        return;
    case CtcKind::rate_limit: {
        std::vector<enforce::EnforcementCommand> cmds;
        if (const auto* port = s.location.switch_port()) {
            cmds.push_back({txn.scratch.next_command,
                            enforce::SetRateLimit{port->switch_id, port->port_id, action.kbps}});
        }
        emit_update(txn, s, reason, cause, json{{"rate_limit_kbps", action.kbps}}, cmds);
        return;
    }
    }
}

} // namespace

ThreatOutcome Engine::handle_threat(const threat::ThreatEvent& evt)
{
    std::unique_lock lock(impl_->mu);
    Txn txn(*impl_);
    const auto window = impl_->config.dedup_window;
    const auto key = evt.dedup_key.empty() ? threat::compute_dedup_key(evt, window) : evt.dedup_key;
    const auto plan = plan_response(txn, evt, key, window);

    json payload{{"event", evt}, {"dedup_key", key}, {"outcome", to_string(plan.disposition)}};
    if (plan.session_id) payload["session_id"] = *plan.session_id;
    if (plan.selection) {
        payload["clause"] = plan.selection->clause_index + 1;
        payload["action"] = plan.selection->action;
    }
    if (!plan.note.empty()) payload["note"] = plan.note;
    const auto trigger = txn.emit(LayerTag::network, kind::threat_alert, std::move(payload));

    if (plan.disposition == ThreatDisposition::applied) {
        const Session s = txn.scratch.sessions.at(*plan.session_id);
        apply_response(txn, s, plan.selection->action, evt, cause_of(trigger));
    }

    ThreatOutcome out;
    out.disposition = plan.disposition;
    out.session_id = plan.session_id;
    if (plan.selection) out.action = plan.selection->action;
    txn.commit(out);
    return out;
}

} // namespace nac::pdp
