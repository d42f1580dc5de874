#include "nac/identity/verifier.hpp"

#include "nac/model/errors.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/rand.h>

#include <charconv>
#include <memory>
#include <random>
#include <vector>

#include <fmt/format.h>

namespace nac::identity {

namespace {

constexpr std::string_view kScheme = "pbkdf2-sha256";
constexpr std::size_t kKeyBytes = 32;

std::string to_hex(std::span<const std::uint8_t> bytes)
{
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(kHex[b >> 4]);
        out.push_back(kHex[b & 0x0f]);
    }
    return out;
}

std::vector<std::uint8_t> from_hex(std::string_view hex)
{
    if (hex.size() % 2 != 0) {
        throw InvalidArgument("odd-length hex in verifier");
    }
    std::vector<std::uint8_t> out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        unsigned value = 0;
        auto [ptr, ec] = std::from_chars(hex.data() + 2 * i, hex.data() + 2 * i + 2, value, 16);
        if (ec != std::errc{} || ptr != hex.data() + 2 * i + 2) {
            throw InvalidArgument("bad hex in verifier");
        }
        out[i] = static_cast<std::uint8_t>(value);
    }
    return out;
}

std::vector<std::uint8_t> derive(std::string_view secret, std::span<const std::uint8_t> salt, int iterations)
{
    std::vector<std::uint8_t> key(kKeyBytes);
    if (PKCS5_PBKDF2_HMAC(secret.data(), static_cast<int>(secret.size()), salt.data(), static_cast<int>(salt.size()),
                          iterations, EVP_sha256(), static_cast<int>(key.size()), key.data()) != 1) {
        throw std::runtime_error("PBKDF2 failed");
    }
    return key;
}

} // namespace

RandomSource system_random()
{
    return [](std::span<std::uint8_t> out) {
        if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
            throw std::runtime_error("RAND_bytes failed");
        }
    };
}

RandomSource seeded_random(std::uint64_t seed)
{
    auto engine = std::make_shared<std::mt19937_64>(seed);
    return [engine](std::span<std::uint8_t> out) {
        for (auto& b : out) {
            b = static_cast<std::uint8_t>((*engine)() & 0xff);
        }
    };
}

std::string make_verifier(std::string_view secret, std::span<const std::uint8_t> salt, int iterations)
{
    if (iterations < 1) {
        throw InvalidArgument("iterations must be positive");
    }
    const auto key = derive(secret, salt, iterations);
    return fmt::format("{}${}${}${}", kScheme, iterations, to_hex(salt), to_hex(key));
}

std::string make_verifier(std::string_view secret, const RandomSource& random, int iterations)
{
    std::vector<std::uint8_t> salt(16);
    random(salt);
    return make_verifier(secret, salt, iterations);
}

bool check_verifier(std::string_view verifier, std::string_view secret)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = verifier.find('$', start);
        parts.push_back(verifier.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    if (parts.size() != 4 || parts[0] != kScheme) {
        throw InvalidArgument("unrecognised verifier format");
    }
    int iterations = 0;
    auto [ptr, ec] = std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), iterations);
    if (ec != std::errc{} || ptr != parts[1].data() + parts[1].size() || iterations < 1) {
        throw InvalidArgument("bad iteration count in verifier");
    }
    const auto salt = from_hex(parts[2]);
    const auto expected = from_hex(parts[3]);
    if (expected.size() != kKeyBytes) {
        throw InvalidArgument("bad key length in verifier");
    }
    const auto actual = derive(secret, salt, iterations);
    return CRYPTO_memcmp(actual.data(), expected.data(), kKeyBytes) == 0;
}

std::string random_token(const RandomSource& random, std::size_t bytes)
{
    std::vector<std::uint8_t> buf(bytes);
    random(buf);
    return to_hex(buf);
}

} // namespace nac::identity
