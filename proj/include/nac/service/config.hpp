#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"
#include "nac/model/clock.hpp"
#include "nac/ngfw/rule.hpp"

namespace nac::service {

/// Service configuration, read from a JSON file. Relative paths resolve
/// against the directory holding the config file.
///
/// {
///   "listen": "127.0.0.1:8080",
///   "syslog_port": 5514,            // null disables the listener
///   "alert_file": "alerts.log",     // optional
///   "directory": "users.jsonl",
///   "posture_policy": "posture.json",
///   "nac_policy": "nac.json",
///   "firewall_rules": "firewall.rules",
///   "threat_policy": "threat.json",
///   "resolver": "resolver.json",
///   "resolver_ttl_seconds": 300,    // optional
///   "dedup_window_ms": 60000,
///   "firewall_default": "deny",
///   "audit_log": "audit.jsonl",
///   "alert_year": 1970,
///   "admin_token": "..."            // optional; guards admin and policy writes
/// }
struct ServiceConfig {
    std::string listen_host = "127.0.0.1";
    int listen_port = 8080;
    std::optional<int> syslog_port;
    std::optional<std::string> alert_file;
    std::string directory_path;
    std::string posture_policy_path;
    std::string nac_policy_path;
    std::string firewall_rules_path;
    std::string threat_policy_path;
    std::string resolver_path;
    std::optional<std::int64_t> resolver_ttl_seconds;
    model::Millis dedup_window = 60000;
    ngfw::Action firewall_default = ngfw::Action::deny;
    std::string audit_log_path;
    int alert_year = 1970;
    std::optional<std::string> admin_token;

    /// Throws ConfigError when a referenced input file is missing.
    void validate() const;
};

/// Throws ConfigError for a malformed document.
ServiceConfig parse_config(const nlohmann::json& j, const std::string& base_dir);
ServiceConfig load_config(const std::string& path);

std::string read_file(const std::string& path);

} // namespace nac::service
