#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

namespace glarify {

using json = nlohmann::json;

/// Serializes `value` with sorted object keys and every floating-point
/// number printed as fixed-point with 6 decimals. Integers stay integers.
std::string canonical_dump(const json& value);

/// Writes `contents` next to `path` and renames it into place, so readers
/// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Reads a whole file; throws DataError when it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 over raw doubles, used to verify that frozen tensors stay put.
std::string tensor_digest(std::span<const double> values);

/// Derives a per-item seed: first 8 bytes of SHA-256 over the
/// length-prefixed global seed and parts, little-endian.
std::uint64_t derive_seed(std::uint64_t global_seed, std::initializer_list<std::string_view> parts);

/// Rounds to the 1e-6 grid that the dataset serializer prints.
double quantize_micro(double v);

/// Little-endian helpers for the binary container formats.
void put_u32_le(std::string& out, std::uint32_t v);
void put_f32_le(std::string& out, float v);
std::uint32_t get_u32_le(std::string_view in, std::size_t offset);
float get_f32_le(std::string_view in, std::size_t offset);

}  // namespace glarify
