#pragma once

#include <map>
#include <shared_mutex>

#include "nac/pdp/engine.hpp"
#include "nac/posture/store.hpp"
#include "nac/threat/correlate.hpp"

namespace nac::pdp {

struct Policies {
    NacPolicy nac;
    posture::PosturePolicy posture;
    threat::ThreatPolicy threat;
    ngfw::RuleSet firewall;
    std::map<PolicyKind, std::string> documents;
};

/// Everything derived from the audit log.
struct State {
    std::map<std::string, Session, std::less<>> sessions;
    posture::PostureStore posture;
    threat::AddressIndex ip_index;
    std::map<std::string, model::Millis> dedup_seen;
    std::uint64_t next_session = 1;
    std::uint64_t next_command = 1;
    Policies policies;
};

/// Side effects of applying one record, collected for the caller.
struct Effects {
    std::vector<enforce::EnforcementCommand> commands;
    std::vector<TransitionInfo> transitions;
};

/// Folds one record into `state`. The live path and replay both go through
/// here. Throws IntegrityError when the record does not fit the state.
void apply_record(State& state, const model::EventEnvelope& env, identity::Directory& directory, Effects& effects);

/// Parses and validates one policy document into `policies`.
void load_policy(Policies& policies, PolicyKind kind, std::string_view document);

struct Engine::Impl {
    Impl(EngineConfig config, identity::Directory& directory, const model::Clock& clock);

    EngineConfig config;
    identity::Directory& directory;
    const model::Clock& clock;
    AuditSink* sink = nullptr;

    mutable std::shared_mutex mu;
    model::EnvelopeSequencer sequencer;
    State state;
    std::vector<model::EventEnvelope> log;
    std::vector<enforce::EnforcementCommand> command_log;
};

class Txn {
public:
    explicit Txn(Engine::Impl& impl);
    ~Txn();
    Txn(const Txn&) = delete;
    Txn& operator=(const Txn&) = delete;

    model::EventEnvelope emit(model::LayerTag source, std::string_view kind, nlohmann::json payload);
    /// Sends the batch to the sink, then swaps the scratch state in.
    void commit(Outcome& out);

    Engine::Impl& impl;
    State scratch;
    model::Millis now;

private:
    std::array<std::uint64_t, 8> seq_snapshot_;
    std::vector<model::EventEnvelope> records_;
    Effects effects_;
    bool committed_ = false;
};

/// Cause reference stored in derived records.
nlohmann::json cause_of(const model::EventEnvelope& env);

/// Commands that put the fabric in line with `s` entering `to`.
std::vector<enforce::EnforcementCommand> commands_for(const Session& s, SessionState to, const NacPolicy& nac,
                                                      std::uint64_t& next_command);

/// Emits a session.transition for `s` → `to`, merging `set` into the session.
model::EventEnvelope emit_transition(Txn& txn, const Session& s, SessionState to, const std::string& reason,
                                     const nlohmann::json& cause, nlohmann::json set = nlohmann::json::object());

/// Emits a session.updated record with the given patch and commands.
model::EventEnvelope emit_update(Txn& txn, const Session& s, const std::string& reason, const nlohmann::json& cause,
                                 const nlohmann::json& set, const std::vector<enforce::EnforcementCommand>& commands);

/// Decision from the inputs stored for a session.
PolicyDecision redecide(const Txn& txn, const Session& s);

/// Brings a session in line with `d`. `admin` lifts a threat hold.
void reconcile(Txn& txn, const Session& s, const PolicyDecision& d, const std::string& reason,
               const nlohmann::json& cause, bool admin);

/// Re-evaluates every Active or Quarantined session on `mac` (or every one
/// when `mac` is null), skipping `exclude`.
void reevaluate_sessions(Txn& txn, const model::MacAddress* mac, const std::string& reason,
                         const nlohmann::json& cause, std::string_view exclude = {});

} // namespace nac::pdp
