#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "nac/identity/verifier.hpp"
#include "nac/model/clock.hpp"
#include "nac/model/identity_types.hpp"

namespace nac::identity {

using model::Millis;

enum class AuthMethod { password, token, mac_only };

std::string_view to_string(AuthMethod method);
std::optional<AuthMethod> parse_auth_method(std::string_view text);

struct Credential {
    AuthMethod method = AuthMethod::password;
    std::string principal;
    /// Absent for mac-only.
    std::optional<std::string> secret;

    static Credential password(std::string principal, std::string secret);
    static Credential token(std::string principal, std::string secret);
    static Credential mac_only(const model::MacAddress& mac);

    /// Throws InvalidArgument if the method/principal/secret combination is
    /// inconsistent (mac-only must carry a MAC and no secret).
    void validate() const;
};

void to_json(nlohmann::json& j, const Credential& cred);
void from_json(const nlohmann::json& j, Credential& cred);

enum class AuthFailure { unknown_user, disabled, bad_credential, expired };

std::string_view to_string(AuthFailure failure);

class AuthResult {
public:
    AuthResult(model::UserIdentity identity) : value_(std::move(identity)) {}
    AuthResult(AuthFailure failure) : value_(failure) {}

    bool ok() const { return std::holds_alternative<model::UserIdentity>(value_); }
    const model::UserIdentity& identity() const { return std::get<model::UserIdentity>(value_); }
    AuthFailure failure() const { return std::get<AuthFailure>(value_); }

private:
    std::variant<model::UserIdentity, AuthFailure> value_;
};

struct DirectoryRecord {
    std::string user_id;
    std::string display_name;
    model::UserKind kind = model::UserKind::employee;
    /// Empty only for MAC-keyed device records, which authenticate mac-only.
    std::string secret_verifier;
    std::set<std::string> roles;
    bool enabled = true;

    void validate() const;
};

void to_json(nlohmann::json& j, const DirectoryRecord& rec);
void from_json(const nlohmann::json& j, DirectoryRecord& rec);

struct GuestRegistration {
    std::string name;
    std::string email;
    std::string sponsor;
    Millis expiry = 0;
};

void from_json(const nlohmann::json& j, GuestRegistration& reg);

/// Stored guest account; the token itself is only ever returned once.
struct GuestRecord {
    std::string user_id;
    std::string name;
    std::string email;
    std::string sponsor;
    Millis expiry = 0;
    std::string secret_verifier;

    model::UserIdentity identity() const;
};

void to_json(nlohmann::json& j, const GuestRecord& rec);
void from_json(const nlohmann::json& j, GuestRecord& rec);

struct GuestCredential {
    GuestRecord record;
    std::string token;

    Credential credential() const { return Credential::token(record.user_id, token); }
};

/// File-backed stand-in for the enterprise directory plus the guest store.
/// Reads may run concurrently; registration takes the writer lock.
class Directory {
public:
    explicit Directory(RandomSource random = system_random(), int iterations = kDefaultIterations);
    Directory(const Directory&) = delete;
    Directory& operator=(const Directory&) = delete;

    /// One JSON DirectoryRecord per line; blank lines are skipped.
    void load_jsonl(std::istream& in);
    void add(DirectoryRecord record);
    /// Adds a record whose verifier is derived from `secret` here.
    void add_user(std::string user_id, std::string_view secret, std::set<std::string> roles,
                  model::UserKind kind = model::UserKind::employee, std::string display_name = {});

    AuthResult authenticate(const Credential& cred, Millis now) const;

    /// Issues a guest account with a server-generated token. Throws
    /// InvalidArgument unless `reg.expiry > now`.
    GuestCredential register_guest(const GuestRegistration& reg, Millis now);
    /// Re-inserts a guest from a persisted record (audit replay).
    void restore_guest(const GuestRecord& record);

    /// Re-checks an already authenticated identity without its secret: the
    /// account must still exist, be enabled and unexpired. Roles come from
    /// the current directory state.
    AuthResult revalidate(const model::UserIdentity& identity, Millis now) const;

    std::optional<GuestRecord> guest(std::string_view user_id) const;
    std::vector<DirectoryRecord> records() const;
    int iterations() const { return iterations_; }

private:
    mutable std::shared_mutex mu_;
    RandomSource random_;
    int iterations_;
    std::map<std::string, DirectoryRecord, std::less<>> records_;
    std::map<std::string, GuestRecord, std::less<>> guests_;
    std::uint64_t guest_counter_ = 0;
};

/// Non-authenticating devices (printers, IP phones) admitted by MAC.
class DeviceAllowlist {
public:
    struct Entry {
        model::MacAddress mac;
        std::string role;
        model::DeviceClass device_class = model::DeviceClass::unknown;
        std::string name;
    };

    void add(Entry entry);
    const Entry* find(const model::MacAddress& mac) const;
    const std::map<model::MacAddress, Entry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }

private:
    std::map<model::MacAddress, Entry> entries_;
};

void to_json(nlohmann::json& j, const DeviceAllowlist::Entry& e);
void from_json(const nlohmann::json& j, DeviceAllowlist::Entry& e);

AuthResult profile_device(const model::MacAddress& mac, const DeviceAllowlist& allowlist);
/// Throws InvalidArgument for a malformed MAC.
AuthResult profile_device(std::string_view mac, const DeviceAllowlist& allowlist);

} // namespace nac::identity
