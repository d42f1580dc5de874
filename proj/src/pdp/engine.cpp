#include "nac/pdp/engine.hpp"

#include "engine_impl.hpp"

#include "nac/model/digest.hpp"
#include "nac/model/errors.hpp"
#include "nac/model/json_util.hpp"

#include <algorithm>
#include <mutex>

#include <fmt/format.h>

namespace nac::pdp {

using model::LayerTag;
using nlohmann::json;

std::string_view to_string(PolicyKind kind)
{
    switch (kind) {
    case PolicyKind::firewall: return "firewall";
    case PolicyKind::threat: return "threat";
    case PolicyKind::posture: return "posture";
    case PolicyKind::nac: return "nac";
    }
    return "?";
}

std::optional<PolicyKind> parse_policy_kind(std::string_view text)
{
    for (auto k : {PolicyKind::firewall, PolicyKind::threat, PolicyKind::posture, PolicyKind::nac}) {
        if (to_string(k) == text) return k;
    }
    return std::nullopt;
}

std::string_view to_string(ThreatDisposition d)
{
    switch (d) {
    case ThreatDisposition::applied: return "applied";
    case ThreatDisposition::suppressed: return "suppressed";
    case ThreatDisposition::uncorrelated: return "uncorrelated";
    case ThreatDisposition::no_match: return "no-match";
    case ThreatDisposition::not_applicable: return "not-applicable";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Policies and record application

void load_policy(Policies& policies, PolicyKind kind, std::string_view document)
{
    switch (kind) {
    case PolicyKind::firewall:
        policies.firewall = ngfw::parse_rules(document);
        policies.documents[kind] = std::string(document);
        return;
    case PolicyKind::threat: {
        const auto doc = model::parse_json(document);
        policies.threat = doc.get<threat::ThreatPolicy>();
        policies.documents[kind] = doc.dump();
        return;
    }
    case PolicyKind::posture: {
        const auto doc = model::parse_json(document);
        auto parsed = doc.get<posture::PosturePolicy>();
        parsed.validate();
        policies.posture = std::move(parsed);
        policies.documents[kind] = doc.dump();
        return;
    }
    case PolicyKind::nac: {
        const auto doc = model::parse_json(document);
        policies.nac = doc.get<NacPolicy>();
        policies.documents[kind] = doc.dump();
        return;
    }
    }
}

namespace {

std::vector<enforce::EnforcementCommand> read_commands(const json& payload, State& state)
{
    std::vector<enforce::EnforcementCommand> out;
    if (const auto it = payload.find("commands"); it != payload.end()) {
        for (const auto& c : *it) {
            auto cmd = c.get<enforce::EnforcementCommand>();
            if (cmd.command_seq < state.next_command) {
                throw IntegrityError(fmt::format("command seq {} not above {}", cmd.command_seq,
                                                 state.next_command - 1));
            }
            state.next_command = cmd.command_seq + 1;
            out.push_back(std::move(cmd));
        }
    }
    return out;
}

Session& find_session(State& state, const std::string& id)
{
    const auto it = state.sessions.find(id);
    if (it == state.sessions.end()) {
        throw IntegrityError(fmt::format("record names unknown session {}", id));
    }
    return it->second;
}

void patch_session(Session& s, const json& set)
{
    if (set.empty()) return;
    json j = s;
    j.merge_patch(set);
    s = j.get<Session>();
}

} // namespace

void apply_record(State& state, const model::EventEnvelope& env, identity::Directory& directory, Effects& effects)
{
    const auto& p = env.payload;
    using model::required;

    if (env.kind == kind::access_request) {
        const auto req = required<json>(p, "request");
        if (const auto it = req.find("posture"); it != req.end()) {
            state.posture.put_report(it->get<posture::PostureReport>());
        }
    } else if (env.kind == kind::session_opened) {
        auto s = required<Session>(p, "session");
        if (state.sessions.contains(s.id)) {
            throw IntegrityError(fmt::format("session {} opened twice", s.id));
        }
        if (s.live()) state.ip_index.insert(s.ip, s.id);
        state.next_session = std::max(state.next_session, s.ordinal() + 1);
        state.sessions.emplace(s.id, std::move(s));
    } else if (env.kind == kind::session_transition) {
        auto& s = find_session(state, required<std::string>(p, "session_id"));
        const auto from = parse_session_state(required<std::string>(p, "from"));
        const auto to = parse_session_state(required<std::string>(p, "to"));
        if (!from || !to || *from != s.state || !legal_transition(*from, *to)) {
            throw IntegrityError(fmt::format("transition record {}#{} does not apply to {} in state {}",
                                             model::to_string(env.source), env.seq, s.id, to_string(s.state)));
        }
        const auto reason = required<std::string>(p, "reason");
        patch_session(s, p.value("set", json::object()));
        s.state = *to;
        s.history.push_back({*from, *to, env.seq, env.ts, reason});
        if (*to == SessionState::terminated) {
            state.ip_index.erase(s.ip, s.id);
        }
        effects.transitions.push_back({s.id, *from, *to, reason, env.seq});
        auto cmds = read_commands(p, state);
        effects.commands.insert(effects.commands.end(), cmds.begin(), cmds.end());
    } else if (env.kind == kind::session_updated) {
        auto& s = find_session(state, required<std::string>(p, "session_id"));
        if (!s.live()) {
            throw IntegrityError(fmt::format("update record for terminated session {}", s.id));
        }
        patch_session(s, p.value("set", json::object()));
        auto cmds = read_commands(p, state);
        effects.commands.insert(effects.commands.end(), cmds.begin(), cmds.end());
    } else if (env.kind == kind::guest_registered) {
        directory.restore_guest(required<identity::GuestRecord>(p, "guest"));
    } else if (env.kind == kind::posture_report) {
        state.posture.put_report(required<posture::PostureReport>(p, "report"));
    } else if (env.kind == kind::posture_scan) {
        state.posture.ingest_scan(required<posture::ScanReport>(p, "scan"), state.policies.posture);
    } else if (env.kind == kind::posture_remediate) {
        const auto mac = required<model::MacAddress>(p, "mac");
        const auto check = required<std::string>(p, "check");
        state.posture.apply_remediation(mac, check, state.policies.posture);
    } else if (env.kind == kind::policy_update) {
        const auto k = parse_policy_kind(required<std::string>(p, "kind"));
        if (!k) {
            throw IntegrityError("policy record with unknown kind");
        }
        load_policy(state.policies, *k, required<std::string>(p, "document"));
        auto cmds = read_commands(p, state);
        effects.commands.insert(effects.commands.end(), cmds.begin(), cmds.end());
    } else if (env.kind == kind::threat_alert) {
        if (required<std::string>(p, "outcome") != to_string(ThreatDisposition::suppressed)) {
            state.dedup_seen[required<std::string>(p, "dedup_key")] = env.ts;
        }
    }
    // admin.* and audit.checkpoint carry no state of their own.
}

// ---------------------------------------------------------------------------
// Transactions

Engine::Impl::Impl(EngineConfig cfg, identity::Directory& dir, const model::Clock& clk)
    : config(std::move(cfg)), directory(dir), clock(clk)
{
    if (config.dedup_window <= 0) {
        throw InvalidArgument("dedup window must be positive");
    }
    auto load = [&](PolicyKind k, const std::string& doc) {
        try {
            load_policy(state.policies, k, doc);
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(fmt::format("{} policy: {}", to_string(k), e.what()));
        }
    };
    load(PolicyKind::nac, config.nac_document);
    load(PolicyKind::posture, config.posture_document);
    load(PolicyKind::threat, config.threat_document);
    load(PolicyKind::firewall, config.firewall_document);
}

Txn::Txn(Engine::Impl& i)
    : impl(i), scratch(i.state), now(i.clock.now()), seq_snapshot_(i.sequencer.snapshot())
{
}

Txn::~Txn()
{
    if (!committed_) {
        impl.sequencer.restore(seq_snapshot_);
    }
}

model::EventEnvelope Txn::emit(LayerTag source, std::string_view k, json payload)
{
    auto env = impl.sequencer.next(source, std::string(k), std::move(payload), impl.clock);
    apply_record(scratch, env, impl.directory, effects_);
    records_.push_back(env);
    return env;
}

void Txn::commit(Outcome& out)
{
    if (impl.sink && !records_.empty()) {
        impl.sink->append(records_);
    }
    impl.state = std::move(scratch);
    impl.log.insert(impl.log.end(), records_.begin(), records_.end());
    impl.command_log.insert(impl.command_log.end(), effects_.commands.begin(), effects_.commands.end());
    out.records = std::move(records_);
    out.commands = std::move(effects_.commands);
    out.transitions = std::move(effects_.transitions);
    committed_ = true;
}

json cause_of(const model::EventEnvelope& env)
{
    return json{{"source", model::to_string(env.source)}, {"seq", env.seq}, {"kind", env.kind}};
}

// ---------------------------------------------------------------------------
// Session helpers

namespace {

ngfw::RuleSet session_prefix(const Session& s, SessionState to)
{
    ngfw::RuleSet rules;
    const model::Ipv4Prefix host{s.ip, 32};
    if (to == SessionState::quarantined) {
        ngfw::FirewallRule r;
        r.src = host;
        r.action = ngfw::Action::deny;
        rules.append(r);
        return rules;
    }
    for (const auto& app : s.denied_apps) {
        ngfw::FirewallRule r;
        r.src = host;
        r.application = app;
        r.action = ngfw::Action::deny;
        rules.append(r);
    }
    return rules;
}

constexpr std::string_view kQuarantineRef = "quarantine";

} // namespace

std::vector<enforce::EnforcementCommand> commands_for(const Session& s, SessionState to, const NacPolicy& nac,
                                                      std::uint64_t& next_command)
{
    std::vector<enforce::EnforcementCommand> out;
    auto push = [&](enforce::CommandBody body) { out.push_back({next_command++, std::move(body)}); };
    const auto* port = s.location.switch_port();
    const bool fw = !nac.firewall_id.empty();

    switch (to) {
    case SessionState::active:
    case SessionState::quarantined:
        if (port) push(enforce::SetPortVlan{port->switch_id, port->port_id, s.vlan});
        if (fw) {
            push(enforce::InstallRuleset{nac.firewall_id,
                                         to == SessionState::active ? s.ruleset_ref : std::string(kQuarantineRef),
                                         s.id, session_prefix(s, to)});
        }
        break;
    case SessionState::disabled:
    case SessionState::terminated:
        if (port) {
            if (nac.on_terminate == TerminateAction::shut_port) {
                push(enforce::ShutPort{port->switch_id, port->port_id});
            } else {
                push(enforce::SetPortVlan{port->switch_id, port->port_id, nac.quarantine_vlan});
            }
        }
        if (fw && !s.ruleset_ref.empty()) push(enforce::RemoveRuleset{nac.firewall_id, s.ruleset_ref, s.id});
        break;
    case SessionState::pending:
        break;
    }
    return out;
}

model::EventEnvelope emit_transition(Txn& txn, const Session& current, SessionState to, const std::string& reason,
                                     const json& cause, json set)
{
    // Commands are derived from the session as it will be after the patch.
    Session next = current;
    patch_session(next, set);
    if (to == SessionState::active) {
        set["ruleset_ref"] = next.ruleset_ref;
    } else if (to == SessionState::quarantined) {
        next.ruleset_ref = std::string(kQuarantineRef);
        set["ruleset_ref"] = next.ruleset_ref;
    }
    auto counter = txn.scratch.next_command;
    const auto commands = commands_for(next, to, txn.scratch.policies.nac, counter);
    if (to == SessionState::disabled || to == SessionState::terminated || to == SessionState::pending) {
        set["ruleset_ref"] = "";
    }
    json payload{
        {"session_id", current.id},
        {"from", to_string(current.state)},
        {"to", to_string(to)},
        {"reason", reason},
        {"cause", cause},
        {"set", set},
        {"commands", commands},
    };
    return txn.emit(LayerTag::nac_posture, kind::session_transition, std::move(payload));
}

model::EventEnvelope emit_update(Txn& txn, const Session& s, const std::string& reason, const json& cause,
                                 const json& set, const std::vector<enforce::EnforcementCommand>& commands)
{
    json payload{
        {"session_id", s.id}, {"reason", reason}, {"cause", cause}, {"set", set}, {"commands", commands},
    };
    return txn.emit(LayerTag::nac_posture, kind::session_updated, std::move(payload));
}

PolicyDecision redecide(const Txn& txn, const Session& s)
{
    const auto& pol = txn.scratch.policies;
    DecisionContext ctx{txn.impl.directory, pol.nac, pol.posture, txn.scratch.posture};
    identity::AuthResult auth = identity::AuthFailure::unknown_user;
    if (s.cred_method == identity::AuthMethod::mac_only) {
        auth = authenticate_request(identity::Credential::mac_only(s.device.mac), ctx, txn.now);
    } else if (s.authenticated) {
        auth = txn.impl.directory.revalidate(s.user, txn.now);
    }
    DecisionInputs in{auth, pol.nac.device_profiles.find(s.device.mac) != nullptr,
                      txn.scratch.posture.verdict(s.device.mac, pol.posture)};
    auto d = decide(in, pol.nac);
    d.decided_at = txn.now;
    json basis{{"session_id", s.id}, {"user", s.user.user_id}, {"device", s.device}, {"location", s.location}};
    if (const auto* r = txn.scratch.posture.report(s.device.mac)) basis["posture"] = *r;
    basis["critical"] = txn.scratch.posture.critical_flag(s.device.mac);
    d.inputs_digest = model::sha256_hex(basis.dump());
    return d;
}

namespace {

json remediation_json(const std::vector<posture::RemediationItem>& items)
{
    auto arr = json::array();
    for (const auto& item : items) {
        arr.push_back({{"requirement_id", item.requirement_id},
                       {"check_id", item.check_id},
                       {"instruction", item.instruction}});
    }
    return arr;
}

json grant_patch(const PolicyDecision& d, const model::UserIdentity* user)
{
    json set{{"role", d.role},
             {"vlan", d.vlan},
             {"ruleset_ref", d.ruleset_ref},
             {"portal", ""},
             {"remediation", json::array()},
             {"threat_hold", false}};
    if (user) set["user"] = *user;
    return set;
}

json quarantine_patch(const PolicyDecision& d)
{
    return json{{"role", ""}, {"vlan", d.vlan}, {"portal", to_string(d.portal)},
                {"remediation", remediation_json(d.remediation)}};
}

std::string decision_reason(const PolicyDecision& d)
{
    switch (d.kind) {
    case DecisionKind::grant: return fmt::format("grant {}", d.role);
    case DecisionKind::quarantine: return d.reason;
    case DecisionKind::deny: return fmt::format("denied: {}", d.reason);
    }
    return "";
}

} // namespace

void reconcile(Txn& txn, const Session& current, const PolicyDecision& d, const std::string& reason,
               const json& cause, bool admin)
{
    const Session s = current;
    const auto why = reason.empty() ? decision_reason(d) : fmt::format("{}: {}", reason, decision_reason(d));
    auto user_now = [&]() -> std::optional<model::UserIdentity> {
        if (!s.authenticated && s.cred_method != identity::AuthMethod::mac_only) return std::nullopt;
        DecisionContext ctx{txn.impl.directory, txn.scratch.policies.nac, txn.scratch.policies.posture,
                            txn.scratch.posture};
        const auto auth = s.cred_method == identity::AuthMethod::mac_only
                              ? authenticate_request(identity::Credential::mac_only(s.device.mac), ctx, txn.now)
                              : txn.impl.directory.revalidate(s.user, txn.now);
        if (auth.ok() && auth.identity() != s.user) return auth.identity();
        return std::nullopt;
    }();

    switch (d.kind) {
    case DecisionKind::grant: {
        if (s.threat_hold && !admin) {
            return;
        }
        auto set = grant_patch(d, user_now ? &*user_now : nullptr);
        if (s.state == SessionState::active) {
            if (s.role == d.role && s.vlan == d.vlan && s.ruleset_ref == d.ruleset_ref && !user_now) {
                return;
            }
            Session next = s;
            patch_session(next, set);
            auto counter = txn.scratch.next_command;
            emit_update(txn, s, why, cause, set, commands_for(next, SessionState::active, txn.scratch.policies.nac,
                                                                counter));
            return;
        }
        emit_transition(txn, s, SessionState::active, why, cause, std::move(set));
        return;
    }
    case DecisionKind::quarantine: {
        auto set = quarantine_patch(d);
        if (admin && s.threat_hold) set["threat_hold"] = false;
        if (s.state == SessionState::quarantined) {
            if (s.threat_hold && !admin) {
                return;
            }
            if (s.vlan == d.vlan && s.portal == d.portal && s.remediation == d.remediation && !set.contains("threat_hold")) {
                return;
            }
            Session next = s;
            patch_session(next, set);
            auto counter = txn.scratch.next_command;
            emit_update(txn, s, why, cause, set,
                        commands_for(next, SessionState::quarantined, txn.scratch.policies.nac, counter));
            return;
        }
        emit_transition(txn, s, SessionState::quarantined, why, cause, std::move(set));
        return;
    }
    case DecisionKind::deny:
        emit_transition(txn, s, SessionState::terminated, why, cause);
        return;
    }
}

void reevaluate_sessions(Txn& txn, const model::MacAddress* mac, const std::string& reason, const json& cause,
                         std::string_view exclude)
{
    std::vector<std::string> ids;
    for (const auto& [id, s] : txn.scratch.sessions) {
        if (id == exclude) continue;
        if (s.state != SessionState::active && s.state != SessionState::quarantined) continue;
        if (mac && s.device.mac != *mac) continue;
        ids.push_back(id);
    }
    for (const auto& id : ids) {
        const Session s = txn.scratch.sessions.at(id);
        reconcile(txn, s, redecide(txn, s), reason, cause, false);
    }
}

// ---------------------------------------------------------------------------
// Engine

Engine::Engine(EngineConfig config, identity::Directory& directory, const model::Clock& clock)
    : impl_(std::make_unique<Impl>(std::move(config), directory, clock))
{
}

Engine::~Engine() = default;

void Engine::set_sink(AuditSink* sink)
{
    std::unique_lock lock(impl_->mu);
    impl_->sink = sink;
}

namespace {

const Session& live_session(const State& state, const std::string& id)
{
    const auto it = state.sessions.find(id);
    if (it == state.sessions.end()) {
        throw NotFound(fmt::format("no session {}", id));
    }
    if (!it->second.live()) {
        throw Conflict(fmt::format("session {} is terminated", id));
    }
    return it->second;
}

model::Ipv4Address allocate_ip(const State& state)
{
    const auto& pool = state.policies.nac.address_pool;
    const auto base = pool.network.value() & pool.mask();
    const std::uint64_t size = pool.length >= 31 ? (1ULL << (32 - pool.length)) : (1ULL << (32 - pool.length)) - 2;
    const std::uint32_t first = pool.length >= 31 ? base : base + 1;
    for (std::uint64_t i = 0; i < size; ++i) {
        const model::Ipv4Address ip{static_cast<std::uint32_t>(first + i)};
        if (!state.ip_index.contains(ip)) {
            return ip;
        }
    }
    throw ConfigError(fmt::format("address pool {} exhausted", pool.to_string()));
}

} // namespace

AccessOutcome Engine::request_access(const AccessRequest& req)
{
    std::unique_lock lock(impl_->mu);
    req.validate();
    Txn txn(*impl_);
    const auto& pol = txn.scratch.policies;
    DecisionContext ctx{impl_->directory, pol.nac, pol.posture, txn.scratch.posture};
    const auto decision = decide_access(req, ctx, txn.now);
    const auto auth = authenticate_request(req.credential, ctx, req.requested_at.value_or(txn.now));

    AccessOutcome out;
    out.decision = decision;
    const auto trigger = txn.emit(LayerTag::nac_posture, kind::access_request,
                                  json{{"request", redacted_json(req)},
                                       {"decision", decision},
                                       {"outcome", to_string(decision.kind)}});
    const auto cause = cause_of(trigger);

    if (decision.kind != DecisionKind::deny) {
        model::UserIdentity user;
        if (auth.ok()) {
            user = auth.identity();
        } else {
            user.user_id = req.credential.principal;
            user.kind = model::UserKind::guest;
        }

        // One live session per (user, device, attachment): the newest wins.
        // A registration session on the same device and attachment is
        // replaced the same way once its owner authenticates.
        std::vector<std::string> superseded;
        for (const auto& [id, s] : txn.scratch.sessions) {
            if (!s.live() || s.device.mac != req.device.mac || s.location.attachment != req.location.attachment) {
                continue;
            }
            if (s.user.user_id == user.user_id || !s.authenticated) {
                superseded.push_back(id);
            }
        }
        const auto new_id = fmt::format("s-{}", txn.scratch.next_session);
        for (const auto& id : superseded) {
            const Session old = txn.scratch.sessions.at(id);
            emit_transition(txn, old, SessionState::terminated, fmt::format("superseded by {}", new_id), cause);
        }

        Session s;
        s.id = new_id;
        s.user = user;
        s.authenticated = auth.ok();
        s.cred_method = req.credential.method;
        s.device = req.device;
        s.location = req.location;
        s.ip = req.ip ? *req.ip : allocate_ip(txn.scratch);
        if (txn.scratch.ip_index.contains(s.ip)) {
            throw Conflict(fmt::format("address {} is held by live session {}", s.ip.to_string(),
                                       *txn.scratch.ip_index.lookup(s.ip)));
        }
        s.opened_at = decision.decided_at;
        txn.emit(LayerTag::nac_posture, kind::session_opened, json{{"session", s}, {"cause", cause}});
        reconcile(txn, s, decision, "", cause, false);
        out.session_id = s.id;
    }
    if (req.posture) {
        reevaluate_sessions(txn, &req.device.mac, "posture-change", cause, out.session_id.value_or(""));
    }
    txn.commit(out);
    return out;
}

Outcome Engine::terminate(const std::string& id, const std::string& reason, const std::string& admin)
{
    std::unique_lock lock(impl_->mu);
    Txn txn(*impl_);
    const Session s = live_session(txn.scratch, id);
    const auto trigger = txn.emit(LayerTag::nac_posture, kind::admin_terminate,
                                  json{{"session_id", id}, {"reason", reason}, {"admin", admin}});
    emit_transition(txn, s, SessionState::terminated, reason.empty() ? "terminated by admin" : reason,
                    cause_of(trigger));
    Outcome out;
    txn.commit(out);
    return out;
}

Outcome Engine::disable(const std::string& id, const std::string& reason, const std::string& admin)
{
    std::unique_lock lock(impl_->mu);
    Txn txn(*impl_);
    const Session s = live_session(txn.scratch, id);
    if (!legal_transition(s.state, SessionState::disabled)) {
        throw Conflict(fmt::format("session {} is {} and cannot be disabled", id, to_string(s.state)));
    }
    const auto trigger = txn.emit(LayerTag::nac_posture, kind::admin_disable,
                                  json{{"session_id", id}, {"reason", reason}, {"admin", admin}});
    emit_transition(txn, s, SessionState::disabled, reason.empty() ? "disabled by admin" : reason,
                    cause_of(trigger));
    Outcome out;
    txn.commit(out);
    return out;
}

Outcome Engine::reenable(const std::string& id, const std::string& admin)
{
    std::unique_lock lock(impl_->mu);
    Txn txn(*impl_);
    const Session s = live_session(txn.scratch, id);
    if (s.state != SessionState::disabled) {
        throw Conflict(fmt::format("session {} is {}; only disabled sessions can be re-enabled", id,
                                   to_string(s.state)));
    }
    const auto trigger =
        txn.emit(LayerTag::nac_posture, kind::admin_reenable, json{{"session_id", id}, {"admin", admin}});
    emit_transition(txn, s, SessionState::pending, fmt::format("re-enabled by {}", admin), cause_of(trigger),
                    json{{"role", ""}, {"vlan", 0}, {"portal", ""}, {"remediation", json::array()}});
    Outcome out;
    txn.commit(out);
    return out;
}

ReevaluateOutcome Engine::reevaluate(const std::string& id, const std::string& admin)
{
    std::unique_lock lock(impl_->mu);
    Txn txn(*impl_);
    const Session s = live_session(txn.scratch, id);
    const auto trigger =
        txn.emit(LayerTag::nac_posture, kind::admin_reevaluate, json{{"session_id", id}, {"admin", admin}});
    const auto cause = cause_of(trigger);
    if (s.state == SessionState::disabled) {
        emit_transition(txn, s, SessionState::pending, fmt::format("re-enabled by {}", admin), cause,
                        json{{"role", ""}, {"vlan", 0}, {"portal", ""}, {"remediation", json::array()}});
    }
    const Session current = txn.scratch.sessions.at(id);
    ReevaluateOutcome out;
    const auto d = redecide(txn, current);
    out.decision = d;
    reconcile(txn, current, d, "admin", cause, true);
    txn.commit(out);
    return out;
}

Outcome Engine::submit_posture(const posture::PostureReport& report)
{
    std::unique_lock lock(impl_->mu);
    report.validate();
    Txn txn(*impl_);
    const auto trigger = txn.emit(LayerTag::nac_posture, kind::posture_report, json{{"report", report}});
    reevaluate_sessions(txn, &report.device.mac, "posture-change", cause_of(trigger));
    Outcome out;
    txn.commit(out);
    return out;
}

Outcome Engine::submit_scan(const posture::ScanReport& scan)
{
    std::unique_lock lock(impl_->mu);
    scan.validate();
    Txn txn(*impl_);
    auto probe = txn.scratch.posture;
    const auto delta = probe.ingest_scan(scan, txn.scratch.policies.posture);
    const auto trigger = txn.emit(LayerTag::nac_posture, kind::posture_scan,
                                  json{{"scan", scan},
                                       {"flagged", delta.flagged_after},
                                       {"stale", delta.stale},
                                       {"outcome", delta.changed() ? "changed" : "unchanged"}});
    if (delta.changed()) {
        reevaluate_sessions(txn, &scan.mac, "posture-change", cause_of(trigger));
    }
    Outcome out;
    txn.commit(out);
    return out;
}

RemediateOutcome Engine::remediate(const std::string& id, const std::string& check)
{
    std::unique_lock lock(impl_->mu);
    Txn txn(*impl_);
    const Session s = live_session(txn.scratch, id);
    auto probe = txn.scratch.posture;
    posture::RemediationResult result;
    try {
        result = probe.apply_remediation(s.device.mac, check, txn.scratch.policies.posture);
    } catch (const NotFound& e) {
        throw Conflict(e.what());
    }
    const auto trigger = txn.emit(LayerTag::nac_posture, kind::posture_remediate,
                                  json{{"session_id", id},
                                       {"mac", s.device.mac},
                                       {"check", check},
                                       {"changed", result.changed},
                                       {"outcome", result.changed ? "remediated" : "no-op"}});
    if (result.changed) {
        reevaluate_sessions(txn, &s.device.mac, "posture-change", cause_of(trigger));
    }
    RemediateOutcome out;
    out.changed = result.changed;
    out.verdict = txn.scratch.posture.verdict(s.device.mac, txn.scratch.policies.posture);
    txn.commit(out);
    return out;
}

GuestOutcome Engine::register_guest(const identity::GuestRegistration& reg)
{
    std::unique_lock lock(impl_->mu);
    Txn txn(*impl_);
    GuestOutcome out;
    out.credential = impl_->directory.register_guest(reg, txn.now);
    txn.emit(LayerTag::application, kind::guest_registered, json{{"guest", out.credential.record}});
    txn.commit(out);
    return out;
}

Outcome Engine::update_policy(PolicyKind k, std::string_view document)
{
    std::unique_lock lock(impl_->mu);
    Txn txn(*impl_);
    Policies candidate = txn.scratch.policies;
    load_policy(candidate, k, document);

    json payload{{"kind", to_string(k)}, {"document", candidate.documents.at(k)}};
    if (k == PolicyKind::firewall && !candidate.nac.firewall_id.empty()) {
        auto counter = txn.scratch.next_command;
        std::vector<enforce::EnforcementCommand> cmds{
            {counter, enforce::InstallRuleset{candidate.nac.firewall_id, "policy", "", candidate.firewall}}};
        payload["commands"] = cmds;
    }
    const auto trigger = txn.emit(k == PolicyKind::firewall ? LayerTag::application
                                  : k == PolicyKind::threat ? LayerTag::network
                                                            : LayerTag::nac_posture,
                                  kind::policy_update, std::move(payload));
    try {
        reevaluate_sessions(txn, nullptr, "policy-change", cause_of(trigger));
    } catch (const ConfigError& e) {
        throw InvalidArgument(fmt::format("policy rejected: {}", e.what()));
    }
    Outcome out;
    txn.commit(out);
    return out;
}

namespace {

std::vector<Session> session_list(const State& state)
{
    std::vector<Session> out;
    out.reserve(state.sessions.size());
    for (const auto& [_, s] : state.sessions) out.push_back(s);
    return out;
}

} // namespace

Outcome Engine::checkpoint()
{
    std::unique_lock lock(impl_->mu);
    Txn txn(*impl_);
    txn.emit(LayerTag::nac_posture, kind::checkpoint,
             json{{"digest", session_table_digest(session_list(txn.scratch))},
                  {"sessions", txn.scratch.sessions.size()}});
    Outcome out;
    txn.commit(out);
    return out;
}

void Engine::replay(const std::vector<model::EventEnvelope>& records)
{
    std::unique_lock lock(impl_->mu);
    if (!impl_->log.empty()) {
        throw Conflict("replay needs a fresh engine");
    }
    check_gap_free(records);
    State state = impl_->state;
    Effects effects;
    std::array<std::uint64_t, 8> counters{};
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& env = records[i];
        try {
            if (env.kind == kind::checkpoint) {
                const auto expected = model::required<std::string>(env.payload, "digest");
                const auto actual = session_table_digest(session_list(state));
                if (expected != actual) {
                    throw IntegrityError(fmt::format("checkpoint digest {} does not match rebuilt {}", expected,
                                                     actual));
                }
            }
            apply_record(state, env, impl_->directory, effects);
        } catch (const Error& e) {
            throw IntegrityError(fmt::format("audit record {}: {}", i + 1, e.what()));
        }
        counters[static_cast<int>(env.source) - 1] = env.seq;
    }
    impl_->state = std::move(state);
    impl_->sequencer.restore(counters);
    impl_->log = records;
    impl_->command_log = std::move(effects.commands);
}

std::vector<Session> Engine::sessions() const
{
    std::shared_lock lock(impl_->mu);
    return session_list(impl_->state);
}

std::optional<Session> Engine::session(std::string_view id) const
{
    std::shared_lock lock(impl_->mu);
    const auto it = impl_->state.sessions.find(id);
    if (it == impl_->state.sessions.end()) return std::nullopt;
    return it->second;
}

std::string Engine::session_digest() const
{
    std::shared_lock lock(impl_->mu);
    return session_table_digest(session_list(impl_->state));
}

std::vector<model::EventEnvelope> Engine::audit_since(std::size_t ordinal) const
{
    std::shared_lock lock(impl_->mu);
    if (ordinal >= impl_->log.size()) return {};
    return {impl_->log.begin() + static_cast<std::ptrdiff_t>(ordinal), impl_->log.end()};
}

std::size_t Engine::audit_size() const
{
    std::shared_lock lock(impl_->mu);
    return impl_->log.size();
}

std::vector<enforce::EnforcementCommand> Engine::commands_since(std::uint64_t seq) const
{
    std::shared_lock lock(impl_->mu);
    std::vector<enforce::EnforcementCommand> out;
    for (const auto& c : impl_->command_log) {
        if (c.command_seq > seq) out.push_back(c);
    }
    return out;
}

std::string Engine::policy_document(PolicyKind k) const
{
    std::shared_lock lock(impl_->mu);
    return impl_->state.policies.documents.at(k);
}

NacPolicy Engine::nac_policy() const
{
    std::shared_lock lock(impl_->mu);
    return impl_->state.policies.nac;
}

posture::PosturePolicy Engine::posture_policy() const
{
    std::shared_lock lock(impl_->mu);
    return impl_->state.policies.posture;
}

threat::ThreatPolicy Engine::threat_policy() const
{
    std::shared_lock lock(impl_->mu);
    return impl_->state.policies.threat;
}

ngfw::RuleSet Engine::firewall_rules() const
{
    std::shared_lock lock(impl_->mu);
    return impl_->state.policies.firewall;
}

posture::PostureVerdict Engine::posture_verdict(const model::MacAddress& mac) const
{
    std::shared_lock lock(impl_->mu);
    return impl_->state.posture.verdict(mac, impl_->state.policies.posture);
}

std::optional<posture::PostureReport> Engine::posture_report(const model::MacAddress& mac) const
{
    std::shared_lock lock(impl_->mu);
    const auto* r = impl_->state.posture.report(mac);
    if (!r) return std::nullopt;
    return *r;
}

std::optional<std::string> Engine::session_for_ip(model::Ipv4Address ip) const
{
    std::shared_lock lock(impl_->mu);
    return impl_->state.ip_index.lookup(ip);
}

ngfw::SessionIndex Engine::session_index() const
{
    std::shared_lock lock(impl_->mu);
    ngfw::SessionIndex index;
    for (const auto& [id, s] : impl_->state.sessions) {
        if (!s.live()) continue;
        ngfw::SessionView view{s.user.user_id, s.user.roles, s.device.device_class};
        if (!s.role.empty()) view.roles.insert(s.role);
        index.emplace(id, std::move(view));
    }
    return index;
}

model::Millis Engine::dedup_window() const
{
    return impl_->config.dedup_window;
}

const model::Clock& Engine::clock() const
{
    return impl_->clock;
}

} // namespace nac::pdp
