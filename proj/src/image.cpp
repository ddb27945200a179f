#include "arsent/image.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include "arsent/codec.hpp"
#include "arsent/errors.hpp"

namespace arsent {

namespace {

DecodedImage decode_png(std::span<const std::uint8_t> png, png_uint_32 format, int channels) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, png.data(), png.size())) {
        throw Error(std::string("PNG decode failed: ") + image.message);
    }
    image.format = format;
    if (image.width == 0 || image.height == 0 || image.width > kMaxImageSide || image.height > kMaxImageSide) {
        png_image_free(&image);
        throw Error("PNG dimensions out of range");
    }
    DecodedImage out;
    out.width = static_cast<int>(image.width);
    out.height = static_cast<int>(image.height);
    out.data.resize(static_cast<std::size_t>(out.width) * out.height * channels);
    // Composite any alpha onto black.
    png_color background{0, 0, 0};
    if (!png_image_finish_read(&image, &background, out.data.data(), 0, nullptr)) {
        png_image_free(&image);
        throw Error(std::string("PNG decode failed: ") + image.message);
    }
    return out;
}

std::vector<std::uint8_t> encode_png(int width, int height, std::span<const std::uint8_t> data,
                                     png_uint_32 format, int channels) {
    if (data.size() != static_cast<std::size_t>(width) * height * channels) {
        throw DimensionError("PNG encode: buffer length does not match dimensions");
    }
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = format;
    image.flags = PNG_IMAGE_FLAG_FAST;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, data.data(), 0, nullptr)) {
        throw Error(std::string("PNG encode failed: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, data.data(), 0, nullptr)) {
        throw Error(std::string("PNG encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

}  // namespace

ImageRef ImageRef::from_pixels(std::string id, int width, int height, PixelBuffer rgb) {
    ImageRef ref;
    ref.id = std::move(id);
    ref.width = width;
    ref.height = height;
    ref.pixels = std::make_shared<const PixelBuffer>(std::move(rgb));
    return ref;
}

ImageRef ImageRef::from_png_file(std::string id, const std::filesystem::path& path) {
    const auto [w, h] = png_dimensions(path);
    ImageRef ref;
    ref.id = std::move(id);
    ref.width = w;
    ref.height = h;
    ref.path = path;
    return ref;
}

ImageRef ImageRef::from_png_bytes(std::string id, std::span<const std::uint8_t> png) {
    auto decoded = decode_png_rgb(png);
    return from_pixels(std::move(id), decoded.width, decoded.height, std::move(decoded.data));
}

std::shared_ptr<const PixelBuffer> ImageRef::rgb() const {
    if (pixels) return pixels;
    if (!path) throw Error("image '" + id + "' has neither pixels nor path");
    const auto bytes = read_file(*path);
    auto decoded = decode_png_rgb(bytes);
    if (decoded.width != width || decoded.height != height) {
        throw DimensionError("image '" + id + "' file dimensions changed since load");
    }
    return std::make_shared<const PixelBuffer>(std::move(decoded.data));
}

std::vector<std::uint8_t> ImageRef::png() const {
    if (path && !pixels) return read_file(*path);
    const auto buf = rgb();
    return encode_png_rgb(width, height, *buf);
}

std::string ImageRef::digest() const {
    const auto buf = rgb();
    return image_digest(width, height, *buf);
}

DecodedImage decode_png_rgb(std::span<const std::uint8_t> png) { return decode_png(png, PNG_FORMAT_RGB, 3); }

DecodedImage decode_png_gray(std::span<const std::uint8_t> png) { return decode_png(png, PNG_FORMAT_GRAY, 1); }

std::vector<std::uint8_t> encode_png_rgb(int width, int height, std::span<const std::uint8_t> rgb) {
    return encode_png(width, height, rgb, PNG_FORMAT_RGB, 3);
}

std::vector<std::uint8_t> encode_png_gray(int width, int height, std::span<const std::uint8_t> gray) {
    return encode_png(width, height, gray, PNG_FORMAT_GRAY, 1);
}

std::pair<int, int> png_dimensions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    unsigned char header[24];
    in.read(reinterpret_cast<char*>(header), sizeof header);
    static constexpr unsigned char signature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (in.gcount() != 24 || std::memcmp(header, signature, 8) != 0 || std::memcmp(header + 12, "IHDR", 4) != 0) {
        throw Error("not a PNG file: " + path.string());
    }
    auto be32 = [&](int off) {
        return (static_cast<std::uint32_t>(header[off]) << 24) | (static_cast<std::uint32_t>(header[off + 1]) << 16) |
               (static_cast<std::uint32_t>(header[off + 2]) << 8) | header[off + 3];
    };
    return {static_cast<int>(be32(16)), static_cast<int>(be32(20))};
}

RasterMask mask_from_png(std::span<const std::uint8_t> png) {
    const auto gray = decode_png_gray(png);
    RasterMask m(gray.width, gray.height);
    for (int y = 0; y < gray.height; ++y) {
        for (int x = 0; x < gray.width; ++x) {
            if (gray.data[static_cast<std::size_t>(y) * gray.width + x] > 127) m.set(x, y);
        }
    }
    return m;
}

std::vector<std::uint8_t> mask_to_png(const RasterMask& mask) {
    return encode_png_gray(mask.width(), mask.height(), mask.to_bytes());
}

std::string image_digest(int width, int height, std::span<const std::uint8_t> rgb) {
    std::string buf = std::to_string(width) + "x" + std::to_string(height) + ":";
    buf.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
    return sha256_hex(std::string_view(buf));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed: " + path.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace arsent
