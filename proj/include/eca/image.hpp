#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace eca {

/// 8-bit RGB raster, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // 3 * width * height

    static Image solid(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b);

    std::uint8_t* pixel(int x, int y) { return rgb.data() + 3 * (static_cast<size_t>(y) * width + x); }
    const std::uint8_t* pixel(int x, int y) const {
        return rgb.data() + 3 * (static_cast<size_t>(y) * width + x);
    }
};

std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(const std::vector<std::uint8_t>& bytes);
Image load_png(const std::filesystem::path& path);
void save_png(const Image& image, const std::filesystem::path& path);

/// Stable fingerprint over dimensions and pixel bytes (not the encoding).
std::uint64_t pixel_digest(const Image& image);

/// Draws `text` in a 5x7 monospaced bitmap font (6px advance, 9px line
/// height), top-left at (x, y). Unknown characters render as a hollow box.
void draw_text(Image& image, int x, int y, const std::string& text, std::uint8_t r,
               std::uint8_t g, std::uint8_t b);

inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;
inline constexpr int kGlyphAdvance = 6;
inline constexpr int kLineHeight = 9;

}  // namespace eca
