#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arsent/mask.hpp"

namespace arsent {

inline constexpr int kMaxImageSide = 8192;

using PixelBuffer = std::vector<std::uint8_t>;

/// A scene image: either an in-memory RGB buffer or a file on disk (exactly one).
///
/// Fields are public so validators can inspect (and tests can construct)
/// inconsistent values; use the factories for well-formed refs.
struct ImageRef {
    std::string id;
    int width = 0;
    int height = 0;
    std::shared_ptr<const PixelBuffer> pixels;
    std::optional<std::filesystem::path> path;

    static ImageRef from_pixels(std::string id, int width, int height, PixelBuffer rgb);
    /// Reads only the PNG header for dimensions.
    static ImageRef from_png_file(std::string id, const std::filesystem::path& path);
    static ImageRef from_png_bytes(std::string id, std::span<const std::uint8_t> png);

    /// RGB pixels, decoding the file when the ref is path-backed.
    std::shared_ptr<const PixelBuffer> rgb() const;
    /// PNG bytes: the file contents when path-backed, an encoding otherwise.
    std::vector<std::uint8_t> png() const;
    /// SHA-256 over "<w>x<h>:" followed by the RGB bytes.
    std::string digest() const;
};

struct DecodedImage {
    int width = 0;
    int height = 0;
    PixelBuffer data;  // RGB or gray depending on the call
};

DecodedImage decode_png_rgb(std::span<const std::uint8_t> png);
DecodedImage decode_png_gray(std::span<const std::uint8_t> png);
std::vector<std::uint8_t> encode_png_rgb(int width, int height, std::span<const std::uint8_t> rgb);
std::vector<std::uint8_t> encode_png_gray(int width, int height, std::span<const std::uint8_t> gray);

/// Width and height from the IHDR chunk.
std::pair<int, int> png_dimensions(const std::filesystem::path& path);

/// Mask PNG convention: 8-bit grayscale, value > 127 is inside.
RasterMask mask_from_png(std::span<const std::uint8_t> png);
std::vector<std::uint8_t> mask_to_png(const RasterMask& mask);

std::string image_digest(int width, int height, std::span<const std::uint8_t> rgb);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace arsent
