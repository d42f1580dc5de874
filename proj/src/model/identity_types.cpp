#include "nac/model/identity_types.hpp"

#include "nac/model/errors.hpp"
#include "nac/model/json_util.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

namespace nac::model {

namespace {

std::string lower(std::string_view text)
{
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view text)
{
    for (const auto& [value, name] : table) {
        if (name == text) {
            return value;
        }
    }
    return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E value)
{
    for (const auto& [v, name] : table) {
        if (v == value) {
            return name;
        }
    }
    return "?";
}

constexpr std::array<std::pair<UserKind, std::string_view>, 4> kKinds{{
    {UserKind::employee, "employee"},
    {UserKind::guest, "guest"},
    {UserKind::contractor, "contractor"},
    {UserKind::device_profile, "device-profile"},
}};

constexpr std::array<std::pair<DeviceClass, std::string_view>, 6> kClasses{{
    {DeviceClass::laptop, "laptop"},
    {DeviceClass::ipad, "ipad"},
    {DeviceClass::blackberry, "blackberry"},
    {DeviceClass::phone, "phone"},
    {DeviceClass::printer, "printer"},
    {DeviceClass::unknown, "unknown"},
}};

constexpr std::array<std::pair<Zone, std::string_view>, 5> kZones{{
    {Zone::lan, "lan"},
    {Zone::vpn, "vpn"},
    {Zone::dmz1, "dmz1"},
    {Zone::dmz2, "dmz2"},
    {Zone::guest, "guest"},
}};

} // namespace

nlohmann::json parse_json(std::string_view text)
{
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidArgument(fmt::format("invalid JSON: {}", e.what()));
    }
}

std::string_view to_string(UserKind kind) { return name_of(kKinds, kind); }
std::optional<UserKind> parse_user_kind(std::string_view text) { return lookup(kKinds, text); }

std::string_view to_string(DeviceClass cls) { return name_of(kClasses, cls); }
std::optional<DeviceClass> parse_device_class(std::string_view text) { return lookup(kClasses, lower(text)); }

std::string_view to_string(Zone zone) { return name_of(kZones, zone); }
std::optional<Zone> parse_zone(std::string_view text) { return lookup(kZones, text); }

std::string describe(const Attachment& attachment)
{
    if (const auto* sp = std::get_if<SwitchPort>(&attachment)) {
        return sp->switch_id + "/" + sp->port_id;
    }
    return "vpn:" + std::get<VpnGateway>(attachment).gateway_id;
}

void to_json(nlohmann::json& j, const UserIdentity& id)
{
    j = nlohmann::json{
        {"user_id", id.user_id},
        {"display_name", id.display_name},
        {"roles", id.roles},
        {"kind", to_string(id.kind)},
    };
}

void from_json(const nlohmann::json& j, UserIdentity& id)
{
    id.user_id = required<std::string>(j, "user_id");
    if (id.user_id.empty()) {
        throw InvalidArgument("user_id must be non-empty");
    }
    id.display_name = optional_field<std::string>(j, "display_name").value_or("");
    id.roles = optional_field<std::set<std::string>>(j, "roles").value_or(std::set<std::string>{});
    const auto kind = required<std::string>(j, "kind");
    const auto parsed = parse_user_kind(kind);
    if (!parsed) {
        throw InvalidArgument(fmt::format("unknown user kind '{}'", kind));
    }
    id.kind = *parsed;
}

void to_json(nlohmann::json& j, const DeviceDescriptor& dev)
{
    j = nlohmann::json{
        {"mac", dev.mac},
        {"device_class", to_string(dev.device_class)},
        {"managed", dev.managed},
    };
}

void from_json(const nlohmann::json& j, DeviceDescriptor& dev)
{
    dev.mac = required<MacAddress>(j, "mac");
    const auto cls = optional_field<std::string>(j, "device_class").value_or("unknown");
    const auto parsed = parse_device_class(cls);
    if (!parsed) {
        throw InvalidArgument(fmt::format("unknown device_class '{}'", cls));
    }
    dev.device_class = *parsed;
    dev.managed = optional_field<bool>(j, "managed").value_or(false);
}

void to_json(nlohmann::json& j, const NetworkLocation& loc)
{
    j = nlohmann::json{{"zone", to_string(loc.zone)}};
    if (const auto* sp = loc.switch_port()) {
        j["switch"] = sp->switch_id;
        j["port"] = sp->port_id;
    } else {
        j["vpn_gateway"] = std::get<VpnGateway>(loc.attachment).gateway_id;
    }
}

void from_json(const nlohmann::json& j, NetworkLocation& loc)
{
    const auto sw = optional_field<std::string>(j, "switch");
    const auto port = optional_field<std::string>(j, "port");
    const auto vpn = optional_field<std::string>(j, "vpn_gateway");
    const bool has_switch = sw.has_value() || port.has_value();
    if (has_switch == vpn.has_value()) {
        throw InvalidArgument("location needs exactly one of switch+port or vpn_gateway");
    }
    if (has_switch) {
        if (!sw || !port || sw->empty() || port->empty()) {
            throw InvalidArgument("switch attachment needs both 'switch' and 'port'");
        }
        loc.attachment = SwitchPort{*sw, *port};
    } else {
        if (vpn->empty()) {
            throw InvalidArgument("vpn_gateway must be non-empty");
        }
        loc.attachment = VpnGateway{*vpn};
    }
    const auto zone = required<std::string>(j, "zone");
    const auto parsed = parse_zone(zone);
    if (!parsed) {
        throw InvalidArgument(fmt::format("unknown zone '{}'", zone));
    }
    loc.zone = *parsed;
}

} // namespace nac::model
