#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace arsent {

/// Axis-aligned pixel rectangle [x, x+w) x [y, y+h).
struct PixelRect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool empty() const { return w <= 0 || h <= 0; }
    bool operator==(const PixelRect&) const = default;
};

/// Binary per-pixel region stored as a row-major bit-set (bit i = pixel y*width+x).
///
/// Storage is packed in 64-bit words; bits past width*height are always zero, so
/// area and intersection reduce to word-wise popcounts.
class RasterMask {
public:
    RasterMask() = default;
    RasterMask(int width, int height);

    static RasterMask from_rect(int width, int height, PixelRect rect);
    /// From a row-major byte buffer; nonzero = inside.
    static RasterMask from_bytes(int width, int height, std::span<const std::uint8_t> bytes);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

    bool get(int x, int y) const;
    void set(int x, int y, bool value = true);
    /// Sets every pixel of rect clipped to the mask bounds.
    void fill_rect(PixelRect rect, bool value = true);

    std::span<const std::uint64_t> words() const { return words_; }
    /// Row-major 0/255 byte buffer.
    std::vector<std::uint8_t> to_bytes() const;
    /// Tight bounding rectangle of set pixels; empty rect when no pixel is set.
    PixelRect bounds() const;

    RasterMask operator&(const RasterMask& other) const;
    RasterMask operator|(const RasterMask& other) const;

    bool operator==(const RasterMask& other) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Key-object area, covered area, and the resulting ratio/flag.
struct ObstructionMeasure {
    std::uint64_t key_area = 0;
    std::uint64_t overlap_area = 0;
    double ratio = 0.0;
    bool flagged = false;

    bool operator==(const ObstructionMeasure&) const = default;
};

/// Number of set pixels.
std::uint64_t area(const RasterMask& mask);

/// Pixels set in both masks. Throws DimensionError on size mismatch.
std::uint64_t intersection_area(const RasterMask& a, const RasterMask& b);

/// Fraction of `key` covered by `content`; exact integer counts divided once.
/// Throws DimensionError on mismatch and Error("empty key object mask") when area(key)==0.
double obstruction_ratio(const RasterMask& key, const RasterMask& content);

/// Throws ConfigError unless threshold is in (0, 1].
void validate_threshold(double threshold);

/// ratio >= threshold (inclusive).
bool flag(double ratio, double threshold);

/// obstruction_ratio + flag in one record.
ObstructionMeasure measure_obstruction(const RasterMask& key, const RasterMask& content,
                                       double threshold);

/// Parsed RLE payload; runs alternate starting with 0-pixels.
struct RlePayload {
    int width = 0;
    int height = 0;
    std::vector<std::uint64_t> runs;

    bool operator==(const RlePayload&) const = default;
};

RlePayload rle_encode(const RasterMask& mask);
RasterMask rle_decode(const RlePayload& payload);

/// Wire text: "<width> <height>\n<run>,<run>,...".
std::string rle_to_text(const RlePayload& payload);
/// Throws MalformedRle on any grammar violation.
RlePayload rle_from_text(std::string_view text);

inline std::string mask_to_rle_text(const RasterMask& mask) { return rle_to_text(rle_encode(mask)); }
inline RasterMask mask_from_rle_text(std::string_view text) { return rle_decode(rle_from_text(text)); }

}  // namespace arsent
