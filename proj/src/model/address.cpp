#include "nac/model/address.hpp"

#include "nac/model/errors.hpp"

#include <arpa/inet.h>
#include <charconv>

#include <fmt/format.h>

namespace nac::model {

namespace {

int hex_digit(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

std::optional<MacAddress> MacAddress::try_parse(std::string_view text)
{
    // "xx:xx:xx:xx:xx:xx" — 17 characters, one separator kind throughout.
    if (text.size() != 17) {
        return std::nullopt;
    }
    const char sep = text[2];
    if (sep != ':' && sep != '-') {
        return std::nullopt;
    }
    std::array<std::uint8_t, 6> octets{};
    for (std::size_t i = 0; i < 6; ++i) {
        const std::size_t at = i * 3;
        const int hi = hex_digit(text[at]);
        const int lo = hex_digit(text[at + 1]);
        if (hi < 0 || lo < 0) {
            return std::nullopt;
        }
        if (i < 5 && text[at + 2] != sep) {
            return std::nullopt;
        }
        octets[i] = static_cast<std::uint8_t>(hi * 16 + lo);
    }
    return MacAddress(octets);
}

MacAddress MacAddress::parse(std::string_view text)
{
    if (auto mac = try_parse(text)) {
        return *mac;
    }
    throw InvalidArgument(fmt::format("malformed MAC address '{}'", text));
}

std::string MacAddress::to_string() const
{
    return fmt::format("{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
                       octets_[0], octets_[1], octets_[2], octets_[3], octets_[4], octets_[5]);
}

std::optional<Ipv4Address> Ipv4Address::try_parse(std::string_view text)
{
    if (text.empty() || text.size() > 15) {
        return std::nullopt;
    }
    std::string buf(text);
    in_addr addr{};
    if (inet_pton(AF_INET, buf.c_str(), &addr) != 1) {
        return std::nullopt;
    }
    return Ipv4Address(ntohl(addr.s_addr));
}

Ipv4Address Ipv4Address::parse(std::string_view text)
{
    if (auto addr = try_parse(text)) {
        return *addr;
    }
    throw InvalidArgument(fmt::format("malformed IPv4 address '{}'", text));
}

std::string Ipv4Address::to_string() const
{
    return fmt::format("{}.{}.{}.{}", value_ >> 24, (value_ >> 16) & 0xff, (value_ >> 8) & 0xff, value_ & 0xff);
}

std::optional<Ipv4Prefix> Ipv4Prefix::try_parse(std::string_view text)
{
    const auto slash = text.find('/');
    auto addr = Ipv4Address::try_parse(text.substr(0, slash));
    if (!addr) {
        return std::nullopt;
    }
    int length = 32;
    if (slash != std::string_view::npos) {
        const auto digits = text.substr(slash + 1);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), length);
        if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size() || length < 0 || length > 32) {
            return std::nullopt;
        }
    }
    Ipv4Prefix prefix{*addr, length};
    prefix.network = Ipv4Address(addr->value() & prefix.mask());
    return prefix;
}

Ipv4Prefix Ipv4Prefix::parse(std::string_view text)
{
    if (auto prefix = try_parse(text)) {
        return *prefix;
    }
    throw InvalidArgument(fmt::format("malformed IPv4 prefix '{}'", text));
}

std::uint32_t Ipv4Prefix::mask() const
{
    return length == 0 ? 0u : ~std::uint32_t{0} << (32 - length);
}

bool Ipv4Prefix::contains(Ipv4Address addr) const
{
    return (addr.value() & mask()) == network.value();
}

std::string Ipv4Prefix::to_string() const
{
    if (length == 32) {
        return network.to_string();
    }
    return fmt::format("{}/{}", network.to_string(), length);
}

void to_json(nlohmann::json& j, const MacAddress& mac) { j = mac.to_string(); }
void from_json(const nlohmann::json& j, MacAddress& mac) { mac = MacAddress::parse(j.get<std::string>()); }
void to_json(nlohmann::json& j, const Ipv4Address& addr) { j = addr.to_string(); }
void from_json(const nlohmann::json& j, Ipv4Address& addr) { addr = Ipv4Address::parse(j.get<std::string>()); }
void to_json(nlohmann::json& j, const Ipv4Prefix& prefix) { j = prefix.to_string(); }
void from_json(const nlohmann::json& j, Ipv4Prefix& prefix) { prefix = Ipv4Prefix::parse(j.get<std::string>()); }

} // namespace nac::model
