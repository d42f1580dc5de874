#include "nac/service/config.hpp"

#include "nac/model/errors.hpp"
#include "nac/model/json_util.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace nac::service {

namespace fs = std::filesystem;

namespace {

std::string resolve(const std::string& base, const std::string& p)
{
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? p : (fs::path(base) / path).string();
}

} // namespace

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError(fmt::format("cannot read '{}'", path));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void ServiceConfig::validate() const
{
    for (const auto* p : {&directory_path, &posture_policy_path, &nac_policy_path, &firewall_rules_path,
                          &threat_policy_path, &resolver_path}) {
        if (!fs::is_regular_file(*p)) {
            throw ConfigError(fmt::format("config references missing file '{}'", *p));
        }
    }
    if (alert_file && !fs::exists(*alert_file)) {
        throw ConfigError(fmt::format("config references missing file '{}'", *alert_file));
    }
    if (audit_log_path.empty()) {
        throw ConfigError("audit_log is required");
    }
    if (listen_port < 0 || listen_port > 65535 || (syslog_port && (*syslog_port < 0 || *syslog_port > 65535))) {
        throw ConfigError("port out of range");
    }
    if (dedup_window <= 0) {
        throw ConfigError("dedup_window_ms must be positive");
    }
}

ServiceConfig parse_config(const nlohmann::json& j, const std::string& base_dir)
{
    using model::optional_field;
    using model::required;
    ServiceConfig c;
    try {
        const auto listen = optional_field<std::string>(j, "listen").value_or("127.0.0.1:8080");
        const auto colon = listen.rfind(':');
        if (colon == std::string::npos) {
            throw InvalidArgument("'listen' must be host:port");
        }
        c.listen_host = listen.substr(0, colon);
        c.listen_port = std::stoi(listen.substr(colon + 1));
        if (j.contains("syslog_port") && !j.at("syslog_port").is_null()) {
            c.syslog_port = j.at("syslog_port").get<int>();
        }
        if (const auto a = optional_field<std::string>(j, "alert_file")) c.alert_file = resolve(base_dir, *a);
        c.directory_path = resolve(base_dir, required<std::string>(j, "directory"));
        c.posture_policy_path = resolve(base_dir, required<std::string>(j, "posture_policy"));
        c.nac_policy_path = resolve(base_dir, required<std::string>(j, "nac_policy"));
        c.firewall_rules_path = resolve(base_dir, required<std::string>(j, "firewall_rules"));
        c.threat_policy_path = resolve(base_dir, required<std::string>(j, "threat_policy"));
        c.resolver_path = resolve(base_dir, required<std::string>(j, "resolver"));
        c.resolver_ttl_seconds = optional_field<std::int64_t>(j, "resolver_ttl_seconds");
        c.dedup_window = optional_field<model::Millis>(j, "dedup_window_ms").value_or(60000);
        const auto def = optional_field<std::string>(j, "firewall_default").value_or("deny");
        if (def != "deny" && def != "permit") {
            throw InvalidArgument("firewall_default must be permit or deny");
        }
        c.firewall_default = def == "permit" ? ngfw::Action::permit : ngfw::Action::deny;
        c.audit_log_path = resolve(base_dir, required<std::string>(j, "audit_log"));
        c.alert_year = optional_field<int>(j, "alert_year").value_or(1970);
        c.admin_token = optional_field<std::string>(j, "admin_token");
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    } catch (const std::exception& e) {
        throw ConfigError(fmt::format("bad config: {}", e.what()));
    }
    c.validate();
    return c;
}

ServiceConfig load_config(const std::string& path)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(fmt::format("{}: {}", path, e.what()));
    }
    return parse_config(j, fs::path(path).parent_path().string());
}

} // namespace nac::service
