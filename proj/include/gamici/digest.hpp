#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace gamici {

/// Strips leading/trailing ASCII whitespace.
std::string_view trim(std::string_view text) noexcept;

/// 16 lowercase hex chars identifying a source line independent of its
/// indentation. FNV-1a 64 over the trimmed bytes.
std::string content_hash(std::string_view line);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

bool is_hex(std::string_view text) noexcept;

std::string sha256_hex(std::string_view bytes);

/// Cryptographically random bytes rendered as lowercase hex.
std::string random_hex(std::size_t bytes);

/// PBKDF2-HMAC-SHA256, hex encoded.
std::string password_digest(std::string_view password, std::string_view salt);

}  // namespace gamici
