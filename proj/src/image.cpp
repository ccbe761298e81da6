#include "eca/image.hpp"

#include <csetjmp>
#include <cstring>

#include <png.h>

#include "eca/errors.hpp"
#include "eca/util.hpp"

namespace eca {

Image Image::solid(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    Image image;
    image.width = width;
    image.height = height;
    image.rgb.resize(static_cast<size_t>(width) * height * 3);
    for (size_t i = 0; i < image.rgb.size(); i += 3) {
        image.rgb[i] = r;
        image.rgb[i + 1] = g;
        image.rgb[i + 2] = b;
    }
    return image;
}

namespace {

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

struct PngReadCursor {
    const std::uint8_t* data;
    size_t size;
    size_t offset;
};

void png_read_from_vector(png_structp png, png_bytep out, png_size_t length) {
    auto* cursor = static_cast<PngReadCursor*>(png_get_io_ptr(png));
    if (cursor->offset + length > cursor->size) {
        png_error(png, "premature end of PNG data");
    }
    std::memcpy(out, cursor->data + cursor->offset, length);
    cursor->offset += length;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& image) {
    if (image.width <= 0 || image.height <= 0 ||
        image.rgb.size() != static_cast<size_t>(image.width) * image.height * 3) {
        throw IoError("cannot encode malformed image");
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    std::vector<std::uint8_t> out;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png encode failed");
    }
    png_set_write_fn(png, &out, png_write_to_vector, nullptr);
    png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y) {
        png_write_row(png, const_cast<png_bytep>(image.pixel(0, y)));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

Image decode_png(const std::vector<std::uint8_t>& bytes) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png decode failed");
    }
    PngReadCursor cursor{bytes.data(), bytes.size(), 0};
    png_set_read_fn(png, &cursor, png_read_from_vector);
    png_read_info(png, info);

    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    Image image;
    image.width = static_cast<int>(png_get_image_width(png, info));
    image.height = static_cast<int>(png_get_image_height(png, info));
    if (png_get_rowbytes(png, info) != static_cast<size_t>(image.width) * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unexpected PNG row layout after conversion");
    }
    image.rgb.resize(static_cast<size_t>(image.width) * image.height * 3);
    for (int y = 0; y < image.height; ++y) {
        png_read_row(png, image.pixel(0, y), nullptr);
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

Image load_png(const std::filesystem::path& path) {
    const std::string raw = read_file(path);
    return decode_png(std::vector<std::uint8_t>(raw.begin(), raw.end()));
}

void save_png(const Image& image, const std::filesystem::path& path) {
    const auto bytes = encode_png(image);
    write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::uint64_t pixel_digest(const Image& image) {
    std::string header = std::to_string(image.width) + "x" + std::to_string(image.height) + ":";
    std::uint64_t h = fnv1a64(header);
    for (std::uint8_t byte : image.rgb) {
        h ^= byte;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace eca
