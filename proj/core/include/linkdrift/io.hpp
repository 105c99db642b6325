#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace linkdrift {

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

std::string read_text_file(const std::filesystem::path& path);

/// Writes atomically enough for our purposes: creates parent directories and
/// throws Error when the file cannot be opened.
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// 64-bit FNV-1a over the raw bytes of a buffer.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 0xCBF29CE484222325ULL);

}  // namespace linkdrift
