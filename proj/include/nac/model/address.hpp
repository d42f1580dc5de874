#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

namespace nac::model {

/// 48-bit hardware address. Canonical text form is lowercase,
/// colon-separated ("aa:bb:cc:dd:ee:ff"); parsing also accepts '-' separators
/// and uppercase digits.
class MacAddress {
public:
    MacAddress() = default;
    explicit MacAddress(std::array<std::uint8_t, 6> octets) : octets_(octets) {}

    static std::optional<MacAddress> try_parse(std::string_view text);
    /// Throws InvalidArgument when `text` is not exactly six hex octets.
    static MacAddress parse(std::string_view text);

    std::string to_string() const;
    const std::array<std::uint8_t, 6>& octets() const { return octets_; }

    auto operator<=>(const MacAddress&) const = default;

private:
    std::array<std::uint8_t, 6> octets_{};
};

class Ipv4Address {
public:
    Ipv4Address() = default;
    explicit Ipv4Address(std::uint32_t host_order) : value_(host_order) {}

    static std::optional<Ipv4Address> try_parse(std::string_view text);
    static Ipv4Address parse(std::string_view text);

    std::uint32_t value() const { return value_; }
    std::string to_string() const;

    auto operator<=>(const Ipv4Address&) const = default;

private:
    std::uint32_t value_ = 0;
};

/// Address block in CIDR form. A bare address parses as a /32.
struct Ipv4Prefix {
    Ipv4Address network;
    int length = 32;

    static std::optional<Ipv4Prefix> try_parse(std::string_view text);
    static Ipv4Prefix parse(std::string_view text);

    bool contains(Ipv4Address addr) const;
    std::uint32_t mask() const;
    std::string to_string() const;

    bool operator==(const Ipv4Prefix&) const = default;
};

void to_json(nlohmann::json& j, const MacAddress& mac);
void from_json(const nlohmann::json& j, MacAddress& mac);
void to_json(nlohmann::json& j, const Ipv4Address& addr);
void from_json(const nlohmann::json& j, Ipv4Address& addr);
void to_json(nlohmann::json& j, const Ipv4Prefix& prefix);
void from_json(const nlohmann::json& j, Ipv4Prefix& prefix);

} // namespace nac::model
