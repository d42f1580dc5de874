#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>

namespace nac::identity {

/// Fills the span with random bytes.
using RandomSource = std::function<void(std::span<std::uint8_t>)>;

/// OS-backed CSPRNG.
RandomSource system_random();
/// Reproducible stream for simulations and tests. Not for production secrets.
RandomSource seeded_random(std::uint64_t seed);

inline constexpr int kDefaultIterations = 10000;

// Verifier text format (stable across runs and releases):
//
//   pbkdf2-sha256$<iterations>$<salt, lowercase hex>$<derived key, lowercase hex>
//
// The derived key is 32 bytes of PBKDF2-HMAC-SHA256(secret, salt, iterations).
std::string make_verifier(std::string_view secret, std::span<const std::uint8_t> salt,
                          int iterations = kDefaultIterations);
std::string make_verifier(std::string_view secret, const RandomSource& random,
                          int iterations = kDefaultIterations);

/// Constant-time check of `secret` against a verifier string. Throws
/// InvalidArgument when the verifier itself is malformed.
bool check_verifier(std::string_view verifier, std::string_view secret);

/// Random token rendered as lowercase hex (2 chars per byte).
std::string random_token(const RandomSource& random, std::size_t bytes = 16);

} // namespace nac::identity
