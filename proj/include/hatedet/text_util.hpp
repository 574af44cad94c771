#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hatedet {

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);

/// Replaces ASCII control characters with spaces, collapses whitespace runs to
/// one space and trims the ends.
std::string normalize_whitespace(std::string_view s);

/// Joins OCR text blocks in the given order with single spaces after
/// normalizing each block. Empty blocks are dropped.
std::string join_blocks(std::span<const std::string> blocks);

std::string read_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename so readers never see a torn file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

std::string base64_encode(std::span<const std::uint8_t> bytes);

/// 64-bit FNV-1a, seeded by folding `seed` into the offset basis.
std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed = 0) noexcept;

}  // namespace hatedet
