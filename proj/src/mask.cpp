#include "arsent/mask.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <string>

#include "arsent/errors.hpp"

namespace arsent {

namespace {

std::size_t word_count(int width, int height) {
    return (static_cast<std::size_t>(width) * height + 63) / 64;
}

std::string dims(const RasterMask& m) {
    return std::to_string(m.width()) + "x" + std::to_string(m.height());
}

void require_same_dims(const RasterMask& a, const RasterMask& b) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw DimensionError("mask dimension mismatch: " + dims(a) + " vs " + dims(b));
    }
}

}  // namespace

RasterMask::RasterMask(int width, int height) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw DimensionError("negative mask dimensions");
    words_.assign(word_count(width, height), 0);
}

RasterMask RasterMask::from_rect(int width, int height, PixelRect rect) {
    RasterMask m(width, height);
    m.fill_rect(rect);
    return m;
}

RasterMask RasterMask::from_bytes(int width, int height, std::span<const std::uint8_t> bytes) {
    RasterMask m(width, height);
    if (bytes.size() != m.pixel_count()) throw DimensionError("mask byte buffer has wrong length");
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        if (bytes[i]) m.words_[i / 64] |= std::uint64_t{1} << (i % 64);
    }
    return m;
}

bool RasterMask::get(int x, int y) const {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) return false;
    const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
    return (words_[i / 64] >> (i % 64)) & 1u;
}

void RasterMask::set(int x, int y, bool value) {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
    const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
    const std::uint64_t bit = std::uint64_t{1} << (i % 64);
    if (value) {
        words_[i / 64] |= bit;
    } else {
        words_[i / 64] &= ~bit;
    }
}

void RasterMask::fill_rect(PixelRect rect, bool value) {
    const int x0 = std::max(rect.x, 0);
    const int y0 = std::max(rect.y, 0);
    const int x1 = std::min(rect.x + rect.w, width_);
    const int y1 = std::min(rect.y + rect.h, height_);
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) set(x, y, value);
    }
}

std::vector<std::uint8_t> RasterMask::to_bytes() const {
    std::vector<std::uint8_t> out(pixel_count());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = ((words_[i / 64] >> (i % 64)) & 1u) ? 255 : 0;
    }
    return out;
}

PixelRect RasterMask::bounds() const {
    int x0 = width_, y0 = height_, x1 = -1, y1 = -1;
    for (std::size_t w = 0; w < words_.size(); ++w) {
        std::uint64_t bits = words_[w];
        while (bits) {
            const int b = std::countr_zero(bits);
            bits &= bits - 1;
            const std::size_t i = w * 64 + b;
            const int x = static_cast<int>(i % width_);
            const int y = static_cast<int>(i / width_);
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    if (x1 < 0) return {};
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

RasterMask RasterMask::operator&(const RasterMask& other) const {
    require_same_dims(*this, other);
    RasterMask out = *this;
    for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] &= other.words_[i];
    return out;
}

RasterMask RasterMask::operator|(const RasterMask& other) const {
    require_same_dims(*this, other);
    RasterMask out = *this;
    for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] |= other.words_[i];
    return out;
}

std::uint64_t area(const RasterMask& mask) {
    std::uint64_t n = 0;
    for (std::uint64_t w : mask.words()) n += static_cast<std::uint64_t>(std::popcount(w));
    return n;
}

std::uint64_t intersection_area(const RasterMask& a, const RasterMask& b) {
    require_same_dims(a, b);
    const auto wa = a.words();
    const auto wb = b.words();
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < wa.size(); ++i) n += static_cast<std::uint64_t>(std::popcount(wa[i] & wb[i]));
    return n;
}

double obstruction_ratio(const RasterMask& key, const RasterMask& content) {
    const std::uint64_t overlap = intersection_area(key, content);
    const std::uint64_t key_area = area(key);
    if (key_area == 0) throw Error("empty key object mask");
    return static_cast<double>(overlap) / static_cast<double>(key_area);
}

void validate_threshold(double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw ConfigError("threshold must be in (0, 1], got " + std::to_string(threshold));
    }
}

bool flag(double ratio, double threshold) {
    validate_threshold(threshold);
    return ratio >= threshold;
}

ObstructionMeasure measure_obstruction(const RasterMask& key, const RasterMask& content, double threshold) {
    ObstructionMeasure m;
    m.overlap_area = intersection_area(key, content);
    m.key_area = area(key);
    if (m.key_area == 0) throw Error("empty key object mask");
    m.ratio = static_cast<double>(m.overlap_area) / static_cast<double>(m.key_area);
    m.flagged = flag(m.ratio, threshold);
    return m;
}

RlePayload rle_encode(const RasterMask& mask) {
    RlePayload p{mask.width(), mask.height(), {}};
    const std::size_t n = mask.pixel_count();
    const auto words = mask.words();
    bool current = false;
    std::uint64_t run = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool bit = (words[i / 64] >> (i % 64)) & 1u;
        if (bit != current) {
            p.runs.push_back(run);
            run = 0;
            current = bit;
        }
        ++run;
    }
    p.runs.push_back(run);
    return p;
}

RasterMask rle_decode(const RlePayload& payload) {
    if (payload.width < 0 || payload.height < 0) throw MalformedRle("negative dimensions");
    const std::uint64_t total = static_cast<std::uint64_t>(payload.width) * payload.height;
    std::uint64_t sum = 0;
    for (std::uint64_t r : payload.runs) {
        if (r > total - std::min(sum, total)) throw MalformedRle("run sum exceeds pixel count");
        sum += r;
    }
    if (sum != total) throw MalformedRle("run sum " + std::to_string(sum) + " != " + std::to_string(total));
    RasterMask m(payload.width, payload.height);
    std::uint64_t pos = 0;
    bool inside = false;
    for (std::uint64_t r : payload.runs) {
        if (inside) {
            for (std::uint64_t i = pos; i < pos + r; ++i) {
                m.set(static_cast<int>(i % payload.width), static_cast<int>(i / payload.width));
            }
        }
        pos += r;
        inside = !inside;
    }
    return m;
}

std::string rle_to_text(const RlePayload& payload) {
    std::string out = std::to_string(payload.width) + " " + std::to_string(payload.height) + "\n";
    for (std::size_t i = 0; i < payload.runs.size(); ++i) {
        if (i) out.push_back(',');
        out += std::to_string(payload.runs[i]);
    }
    return out;
}

namespace {

template <typename Int>
Int parse_number(std::string_view token, const char* what) {
    Int value{};
    if (token.empty()) throw MalformedRle(std::string("empty ") + what);
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw MalformedRle(std::string("non-numeric ") + what + " '" + std::string(token) + "'");
    }
    return value;
}

}  // namespace

RlePayload rle_from_text(std::string_view text) {
    const auto nl = text.find('\n');
    if (nl == std::string_view::npos) throw MalformedRle("missing header line");
    const std::string_view header = text.substr(0, nl);
    const auto sp = header.find(' ');
    if (sp == std::string_view::npos) throw MalformedRle("header must be '<width> <height>'");
    RlePayload p;
    p.width = parse_number<int>(header.substr(0, sp), "width");
    p.height = parse_number<int>(header.substr(sp + 1), "height");
    if (p.width < 0 || p.height < 0) throw MalformedRle("negative dimensions");

    std::string_view body = text.substr(nl + 1);
    std::size_t start = 0;
    while (true) {
        const auto comma = body.find(',', start);
        const auto token = body.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        if (token.size() > 0 && (token.front() == '-' || token.front() == '+')) {
            throw MalformedRle("signed run '" + std::string(token) + "'");
        }
        p.runs.push_back(parse_number<std::uint64_t>(token, "run"));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    const std::uint64_t total = static_cast<std::uint64_t>(p.width) * p.height;
    std::uint64_t sum = 0;
    for (std::uint64_t r : p.runs) {
        if (r > total || sum > total - r) throw MalformedRle("run sum exceeds pixel count");
        sum += r;
    }
    if (sum != total) throw MalformedRle("run sum " + std::to_string(sum) + " != " + std::to_string(total));
    return p;
}

}  // namespace arsent
