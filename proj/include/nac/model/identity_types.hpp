#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>

#include "json.hpp"
#include "nac/model/address.hpp"

namespace nac::model {

enum class UserKind { employee, guest, contractor, device_profile };

std::string_view to_string(UserKind kind);
std::optional<UserKind> parse_user_kind(std::string_view text);

struct UserIdentity {
    std::string user_id;
    std::string display_name;
    std::set<std::string> roles;
    UserKind kind = UserKind::employee;

    bool has_role(std::string_view role) const { return roles.contains(std::string(role)); }
    bool operator==(const UserIdentity&) const = default;
};

enum class DeviceClass { laptop, ipad, blackberry, phone, printer, unknown };

std::string_view to_string(DeviceClass cls);
/// Case-insensitive ("iPAD" → ipad).
std::optional<DeviceClass> parse_device_class(std::string_view text);

struct DeviceDescriptor {
    MacAddress mac;
    DeviceClass device_class = DeviceClass::unknown;
    bool managed = false;

    bool operator==(const DeviceDescriptor&) const = default;
};

enum class Zone { lan, vpn, dmz1, dmz2, guest };

std::string_view to_string(Zone zone);
std::optional<Zone> parse_zone(std::string_view text);

struct SwitchPort {
    std::string switch_id;
    std::string port_id;
    auto operator<=>(const SwitchPort&) const = default;
};

struct VpnGateway {
    std::string gateway_id;
    auto operator<=>(const VpnGateway&) const = default;
};

using Attachment = std::variant<SwitchPort, VpnGateway>;

struct NetworkLocation {
    Attachment attachment;
    Zone zone = Zone::lan;

    const SwitchPort* switch_port() const { return std::get_if<SwitchPort>(&attachment); }
    bool operator==(const NetworkLocation&) const = default;
};

std::string describe(const Attachment& attachment);

void to_json(nlohmann::json& j, const UserIdentity& id);
void from_json(const nlohmann::json& j, UserIdentity& id);
void to_json(nlohmann::json& j, const DeviceDescriptor& dev);
void from_json(const nlohmann::json& j, DeviceDescriptor& dev);
void to_json(nlohmann::json& j, const NetworkLocation& loc);
/// Requires exactly one of {switch+port, vpn_gateway}.
void from_json(const nlohmann::json& j, NetworkLocation& loc);

} // namespace nac::model
