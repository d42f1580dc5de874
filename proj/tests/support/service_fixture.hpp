#pragma once

// Temporary service installation built from tests/data/service.

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace fixture {

struct ServiceDir {
    std::filesystem::path root;

    explicit ServiceDir(const std::string& tag)
    {
        std::random_device rd;
        root = std::filesystem::temp_directory_path() / ("nacpdp-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(root);
        for (const auto& e : std::filesystem::directory_iterator(std::string(NAC_TEST_DATA) + "/service")) {
            if (e.path().filename() == "audit.jsonl") continue;
            std::filesystem::copy_file(e.path(), root / e.path().filename());
        }
        auto cfg = nlohmann::json::parse(std::ifstream(root / "config.json"));
        cfg["listen"] = "127.0.0.1:0";
        cfg["syslog_port"] = 0;
        cfg["alert_year"] = 1970;
        std::ofstream(root / "config.json") << cfg.dump(2);
    }
    ~ServiceDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(root, ec);
    }
    ServiceDir(const ServiceDir&) = delete;
    ServiceDir& operator=(const ServiceDir&) = delete;

    std::string config() const { return (root / "config.json").string(); }
    std::string file(const std::string& name) const { return (root / name).string(); }
};

inline nlohmann::json access_body(const std::string& user, const std::string& secret, int host, bool av, int patch = 7)
{
    char mac[32];
    std::snprintf(mac, sizeof mac, "00:16:3e:00:00:%02x", host);
    return {
        {"credential", {{"method", "password"}, {"principal", user}, {"secret", secret}}},
        {"device", {{"mac", mac}, {"device_class", "laptop"}}},
        {"location", {{"switch", "sw1"}, {"port", std::to_string(host)}, {"zone", "lan"}}},
        {"posture",
         {{"device", {{"mac", mac}}},
          {"checks", {{"av_installed", av}, {"patch_level", patch}, {"firewall_enabled", true}}}}},
    };
}

} // namespace fixture
