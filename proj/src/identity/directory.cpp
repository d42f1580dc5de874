#include "nac/identity/directory.hpp"

#include "nac/model/errors.hpp"
#include "nac/model/json_util.hpp"

#include <istream>
#include <mutex>

#include <fmt/format.h>

namespace nac::identity {

using model::optional_field;
using model::required;

std::string_view to_string(AuthMethod method)
{
    switch (method) {
    case AuthMethod::password: return "password";
    case AuthMethod::token: return "token";
    case AuthMethod::mac_only: return "mac-only";
    }
    return "?";
}

std::optional<AuthMethod> parse_auth_method(std::string_view text)
{
    if (text == "password") return AuthMethod::password;
    if (text == "token") return AuthMethod::token;
    if (text == "mac-only") return AuthMethod::mac_only;
    return std::nullopt;
}

std::string_view to_string(AuthFailure failure)
{
    switch (failure) {
    case AuthFailure::unknown_user: return "unknown-user";
    case AuthFailure::disabled: return "disabled";
    case AuthFailure::bad_credential: return "bad-credential";
    case AuthFailure::expired: return "expired";
    }
    return "?";
}

Credential Credential::password(std::string principal, std::string secret)
{
    return Credential{AuthMethod::password, std::move(principal), std::move(secret)};
}

Credential Credential::token(std::string principal, std::string secret)
{
    return Credential{AuthMethod::token, std::move(principal), std::move(secret)};
}

Credential Credential::mac_only(const model::MacAddress& mac)
{
    return Credential{AuthMethod::mac_only, mac.to_string(), std::nullopt};
}

void Credential::validate() const
{
    if (principal.empty()) {
        throw InvalidArgument("credential principal must be non-empty");
    }
    if (method == AuthMethod::mac_only) {
        if (secret) {
            throw InvalidArgument("mac-only credential must not carry a secret");
        }
        if (!model::MacAddress::try_parse(principal)) {
            throw InvalidArgument(fmt::format("mac-only principal '{}' is not a MAC address", principal));
        }
    } else if (!secret) {
        throw InvalidArgument(fmt::format("{} credential requires a secret", to_string(method)));
    }
}

void to_json(nlohmann::json& j, const Credential& cred)
{
    j = nlohmann::json{{"method", to_string(cred.method)}, {"principal", cred.principal}};
    if (cred.secret) {
        j["secret"] = *cred.secret;
    }
}

void from_json(const nlohmann::json& j, Credential& cred)
{
    const auto method = required<std::string>(j, "method");
    const auto parsed = parse_auth_method(method);
    if (!parsed) {
        throw InvalidArgument(fmt::format("unknown credential method '{}'", method));
    }
    cred.method = *parsed;
    cred.principal = required<std::string>(j, "principal");
    cred.secret = optional_field<std::string>(j, "secret");
    if (cred.method == AuthMethod::mac_only) {
        cred.principal = model::MacAddress::parse(cred.principal).to_string();
    }
    cred.validate();
}

void DirectoryRecord::validate() const
{
    if (user_id.empty()) {
        throw InvalidArgument("directory record needs a user_id");
    }
    if (roles.empty()) {
        throw InvalidArgument(fmt::format("directory record '{}' needs at least one role", user_id));
    }
    if (secret_verifier.empty() && !model::MacAddress::try_parse(user_id)) {
        throw InvalidArgument(fmt::format("directory record '{}' has no secret verifier", user_id));
    }
}

void to_json(nlohmann::json& j, const DirectoryRecord& rec)
{
    j = nlohmann::json{
        {"user_id", rec.user_id},
        {"display_name", rec.display_name},
        {"kind", model::to_string(rec.kind)},
        {"secret_verifier", rec.secret_verifier},
        {"roles", rec.roles},
        {"enabled", rec.enabled},
    };
}

void from_json(const nlohmann::json& j, DirectoryRecord& rec)
{
    rec.user_id = required<std::string>(j, "user_id");
    rec.display_name = optional_field<std::string>(j, "display_name").value_or("");
    const auto kind = optional_field<std::string>(j, "kind").value_or("employee");
    const auto parsed = model::parse_user_kind(kind);
    if (!parsed) {
        throw InvalidArgument(fmt::format("unknown user kind '{}'", kind));
    }
    rec.kind = *parsed;
    rec.secret_verifier = optional_field<std::string>(j, "secret_verifier").value_or("");
    rec.roles = required<std::set<std::string>>(j, "roles");
    rec.enabled = optional_field<bool>(j, "enabled").value_or(true);
    // Directory records for MAC-keyed devices use the canonical MAC as id.
    if (auto mac = model::MacAddress::try_parse(rec.user_id)) {
        rec.user_id = mac->to_string();
    }
    rec.validate();
}

void from_json(const nlohmann::json& j, GuestRegistration& reg)
{
    reg.name = required<std::string>(j, "name");
    reg.email = optional_field<std::string>(j, "email").value_or("");
    reg.sponsor = optional_field<std::string>(j, "sponsor").value_or("");
    reg.expiry = required<Millis>(j, "expiry");
}

model::UserIdentity GuestRecord::identity() const
{
    return model::UserIdentity{user_id, name, {"guest"}, model::UserKind::guest};
}

void to_json(nlohmann::json& j, const GuestRecord& rec)
{
    j = nlohmann::json{
        {"user_id", rec.user_id},
        {"name", rec.name},
        {"email", rec.email},
        {"sponsor", rec.sponsor},
        {"expiry", rec.expiry},
        {"secret_verifier", rec.secret_verifier},
    };
}

void from_json(const nlohmann::json& j, GuestRecord& rec)
{
    rec.user_id = required<std::string>(j, "user_id");
    rec.name = required<std::string>(j, "name");
    rec.email = optional_field<std::string>(j, "email").value_or("");
    rec.sponsor = optional_field<std::string>(j, "sponsor").value_or("");
    rec.expiry = required<Millis>(j, "expiry");
    rec.secret_verifier = required<std::string>(j, "secret_verifier");
}

Directory::Directory(RandomSource random, int iterations)
    : random_(std::move(random))
    , iterations_(iterations)
{
}

void Directory::load_jsonl(std::istream& in)
{
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            add(model::parse_json(line).get<DirectoryRecord>());
        } catch (const nac::Error& e) {
            throw InvalidArgument(fmt::format("directory line {}: {}", lineno, e.what()));
        } catch (const nlohmann::json::exception& e) {
            throw InvalidArgument(fmt::format("directory line {}: {}", lineno, e.what()));
        }
    }
}

void Directory::add(DirectoryRecord record)
{
    record.validate();
    std::unique_lock lock(mu_);
    if (records_.contains(record.user_id) || guests_.contains(record.user_id)) {
        throw InvalidArgument(fmt::format("duplicate user_id '{}'", record.user_id));
    }
    auto id = record.user_id;
    records_.emplace(std::move(id), std::move(record));
}

void Directory::add_user(std::string user_id, std::string_view secret, std::set<std::string> roles,
                         model::UserKind kind, std::string display_name)
{
    DirectoryRecord rec;
    rec.user_id = std::move(user_id);
    rec.display_name = std::move(display_name);
    rec.kind = kind;
    rec.secret_verifier = make_verifier(secret, random_, iterations_);
    rec.roles = std::move(roles);
    add(std::move(rec));
}

AuthResult Directory::authenticate(const Credential& cred, Millis now) const
{
    cred.validate();
    std::shared_lock lock(mu_);

    if (cred.method == AuthMethod::mac_only) {
        const auto it = records_.find(model::MacAddress::parse(cred.principal).to_string());
        if (it == records_.end()) {
            return AuthFailure::unknown_user;
        }
        if (!it->second.enabled) {
            return AuthFailure::disabled;
        }
        const auto& rec = it->second;
        return model::UserIdentity{rec.user_id, rec.display_name, rec.roles, rec.kind};
    }

    if (const auto it = records_.find(cred.principal); it != records_.end()) {
        const auto& rec = it->second;
        if (rec.secret_verifier.empty() || !check_verifier(rec.secret_verifier, *cred.secret)) {
            return AuthFailure::bad_credential;
        }
        if (!rec.enabled) {
            return AuthFailure::disabled;
        }
        return model::UserIdentity{rec.user_id, rec.display_name, rec.roles, rec.kind};
    }

    if (const auto it = guests_.find(cred.principal); it != guests_.end()) {
        const auto& guest = it->second;
        if (!check_verifier(guest.secret_verifier, *cred.secret)) {
            return AuthFailure::bad_credential;
        }
        if (now >= guest.expiry) {
            return AuthFailure::expired;
        }
        return guest.identity();
    }

    return AuthFailure::unknown_user;
}

GuestCredential Directory::register_guest(const GuestRegistration& reg, Millis now)
{
    if (reg.name.empty()) {
        throw InvalidArgument("guest registration needs a name");
    }
    if (reg.expiry <= now) {
        throw InvalidArgument(fmt::format("guest expiry {} is not in the future (now {})", reg.expiry, now));
    }
    std::unique_lock lock(mu_);
    std::string user_id;
    do {
        user_id = fmt::format("guest-{}", ++guest_counter_);
    } while (records_.contains(user_id) || guests_.contains(user_id));

    GuestCredential out;
    out.token = random_token(random_);
    out.record = GuestRecord{user_id, reg.name, reg.email, reg.sponsor, reg.expiry,
                             make_verifier(out.token, random_, iterations_)};
    guests_.emplace(user_id, out.record);
    return out;
}

void Directory::restore_guest(const GuestRecord& record)
{
    std::unique_lock lock(mu_);
    guests_.insert_or_assign(record.user_id, record);
    // Keep the id counter ahead of restored ids so new guests never collide.
    if (record.user_id.starts_with("guest-")) {
        try {
            guest_counter_ = std::max<std::uint64_t>(guest_counter_, std::stoull(record.user_id.substr(6)));
        } catch (const std::exception&) {
        }
    }
}

AuthResult Directory::revalidate(const model::UserIdentity& identity, Millis now) const
{
    std::shared_lock lock(mu_);
    if (identity.kind == model::UserKind::guest) {
        const auto it = guests_.find(identity.user_id);
        if (it == guests_.end()) {
            return AuthFailure::unknown_user;
        }
        if (now >= it->second.expiry) {
            return AuthFailure::expired;
        }
        return it->second.identity();
    }
    const auto it = records_.find(identity.user_id);
    if (it == records_.end()) {
        return AuthFailure::unknown_user;
    }
    if (!it->second.enabled) {
        return AuthFailure::disabled;
    }
    const auto& rec = it->second;
    return model::UserIdentity{rec.user_id, rec.display_name, rec.roles, rec.kind};
}

std::optional<GuestRecord> Directory::guest(std::string_view user_id) const
{
    std::shared_lock lock(mu_);
    const auto it = guests_.find(user_id);
    if (it == guests_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<DirectoryRecord> Directory::records() const
{
    std::shared_lock lock(mu_);
    std::vector<DirectoryRecord> out;
    for (const auto& [id, rec] : records_) {
        out.push_back(rec);
    }
    return out;
}

void DeviceAllowlist::add(Entry entry)
{
    if (entry.role.empty()) {
        throw InvalidArgument(fmt::format("allowlist entry {} needs a role", entry.mac.to_string()));
    }
    const auto mac = entry.mac;
    if (!entries_.emplace(mac, std::move(entry)).second) {
        throw InvalidArgument(fmt::format("duplicate allowlist entry {}", mac.to_string()));
    }
}

const DeviceAllowlist::Entry* DeviceAllowlist::find(const model::MacAddress& mac) const
{
    const auto it = entries_.find(mac);
    return it == entries_.end() ? nullptr : &it->second;
}

void to_json(nlohmann::json& j, const DeviceAllowlist::Entry& e)
{
    j = nlohmann::json{
        {"mac", e.mac},
        {"role", e.role},
        {"device_class", model::to_string(e.device_class)},
        {"name", e.name},
    };
}

void from_json(const nlohmann::json& j, DeviceAllowlist::Entry& e)
{
    e.mac = required<model::MacAddress>(j, "mac");
    e.role = required<std::string>(j, "role");
    const auto cls = optional_field<std::string>(j, "device_class").value_or("unknown");
    const auto parsed = model::parse_device_class(cls);
    if (!parsed) {
        throw InvalidArgument(fmt::format("unknown device_class '{}'", cls));
    }
    e.device_class = *parsed;
    e.name = optional_field<std::string>(j, "name").value_or("");
}

AuthResult profile_device(const model::MacAddress& mac, const DeviceAllowlist& allowlist)
{
    const auto* entry = allowlist.find(mac);
    if (!entry) {
        return AuthFailure::unknown_user;
    }
    return model::UserIdentity{mac.to_string(), entry->name.empty() ? mac.to_string() : entry->name, {entry->role},
                               model::UserKind::device_profile};
}

AuthResult profile_device(std::string_view mac, const DeviceAllowlist& allowlist)
{
    return profile_device(model::MacAddress::parse(mac), allowlist);
}

} // namespace nac::identity
