#include "nac/enforce/command.hpp"

#include "nac/model/errors.hpp"
#include "nac/model/json_util.hpp"

#include <fmt/format.h>

namespace nac::enforce {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

} // namespace

std::string describe(const CommandBody& body)
{
    return std::visit(overloaded{
                          [](const SetPortVlan& c) {
                              return fmt::format("SetPortVlan({},{},{})", c.switch_id, c.port_id, c.vlan);
                          },
                          [](const ShutPort& c) { return fmt::format("ShutPort({},{})", c.switch_id, c.port_id); },
                          [](const SetRateLimit& c) {
                              return fmt::format("SetRateLimit({},{},{})", c.switch_id, c.port_id, c.kbps);
                          },
                          [](const InstallRuleset& c) {
                              if (c.session_id.empty()) {
                                  return fmt::format("InstallRuleset({},{},{} rules)", c.firewall_id, c.ref,
                                                     c.rules.size());
                              }
                              return fmt::format("InstallRuleset({},{},{},{} rules)", c.firewall_id, c.ref,
                                                 c.session_id, c.rules.size());
                          },
                          [](const RemoveRuleset& c) {
                              return fmt::format("RemoveRuleset({},{},{})", c.firewall_id, c.ref, c.session_id);
                          },
                      },
                      body);
}

std::string describe(const EnforcementCommand& cmd)
{
    return describe(cmd.body);
}

void to_json(nlohmann::json& j, const EnforcementCommand& cmd)
{
    j = std::visit(overloaded{
                       [](const SetPortVlan& c) {
                           return nlohmann::json{{"type", "set_port_vlan"}, {"switch", c.switch_id},
                                                 {"port", c.port_id}, {"vlan", c.vlan}};
                       },
                       [](const ShutPort& c) {
                           return nlohmann::json{{"type", "shut_port"}, {"switch", c.switch_id}, {"port", c.port_id}};
                       },
                       [](const SetRateLimit& c) {
                           return nlohmann::json{{"type", "set_rate_limit"}, {"switch", c.switch_id},
                                                 {"port", c.port_id}, {"kbps", c.kbps}};
                       },
                       [](const InstallRuleset& c) {
                           return nlohmann::json{{"type", "install_ruleset"}, {"firewall", c.firewall_id},
                                                 {"ref", c.ref}, {"session_id", c.session_id},
                                                 {"rules", ngfw::format_rules(c.rules)}};
                       },
                       [](const RemoveRuleset& c) {
                           return nlohmann::json{{"type", "remove_ruleset"}, {"firewall", c.firewall_id},
                                                 {"ref", c.ref}, {"session_id", c.session_id}};
                       },
                   },
                   cmd.body);
    j["seq"] = cmd.command_seq;
}

void from_json(const nlohmann::json& j, EnforcementCommand& cmd)
{
    using model::required;
    cmd.command_seq = required<std::uint64_t>(j, "seq");
    const auto type = required<std::string>(j, "type");
    if (type == "set_port_vlan") {
        cmd.body = SetPortVlan{required<std::string>(j, "switch"), required<std::string>(j, "port"),
                               required<int>(j, "vlan")};
    } else if (type == "shut_port") {
        cmd.body = ShutPort{required<std::string>(j, "switch"), required<std::string>(j, "port")};
    } else if (type == "set_rate_limit") {
        cmd.body = SetRateLimit{required<std::string>(j, "switch"), required<std::string>(j, "port"),
                                required<std::uint32_t>(j, "kbps")};
    } else if (type == "install_ruleset") {
        cmd.body = InstallRuleset{required<std::string>(j, "firewall"), required<std::string>(j, "ref"),
                                  required<std::string>(j, "session_id"),
                                  ngfw::parse_rules(required<std::string>(j, "rules"))};
    } else if (type == "remove_ruleset") {
        cmd.body = RemoveRuleset{required<std::string>(j, "firewall"), required<std::string>(j, "ref"),
                                 required<std::string>(j, "session_id")};
    } else {
        throw InvalidArgument(fmt::format("unknown command type '{}'", type));
    }
}

} // namespace nac::enforce
