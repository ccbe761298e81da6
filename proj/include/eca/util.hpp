#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace eca {

// FNV-1a 64-bit. Used for stable request digests and content fingerprints;
// not cryptographic.
constexpr std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t value);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Reads a whole file; throws IoError on failure.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Fixed-format float rendering for reports ("0.5000" style).
std::string format_fixed(double value, int decimals);

}  // namespace eca
