#include "arsent/glyphs.hpp"

#include <algorithm>
#include <vector>

#include "arsent/vim.hpp"

namespace arsent {

namespace {

struct GlyphRows {
    char32_t codepoint;
    const char* rows[kGlyphHeight];
};

// clang-format off
constexpr GlyphRows kFont[] = {
    {U' ', {"00000", "00000", "00000", "00000", "00000", "00000", "00000"}},
    {U'A', {"01110", "10001", "10001", "11111", "10001", "10001", "10001"}},
    {U'B', {"11110", "10001", "10001", "11110", "10001", "10001", "11110"}},
    {U'C', {"01110", "10001", "10000", "10000", "10000", "10001", "01110"}},
    {U'D', {"11100", "10010", "10001", "10001", "10001", "10010", "11100"}},
    {U'E', {"11111", "10000", "10000", "11110", "10000", "10000", "11111"}},
    {U'F', {"11111", "10000", "10000", "11110", "10000", "10000", "10000"}},
    {U'G', {"01110", "10001", "10000", "10111", "10001", "10001", "01111"}},
    {U'H', {"10001", "10001", "10001", "11111", "10001", "10001", "10001"}},
    {U'I', {"01110", "00100", "00100", "00100", "00100", "00100", "01110"}},
    {U'J', {"00111", "00010", "00010", "00010", "00010", "10010", "01100"}},
    {U'K', {"10001", "10010", "10100", "11000", "10100", "10010", "10001"}},
    {U'L', {"10000", "10000", "10000", "10000", "10000", "10000", "11111"}},
    {U'M', {"10001", "11011", "10101", "10101", "10001", "10001", "10001"}},
    {U'N', {"10001", "10001", "11001", "10101", "10011", "10001", "10001"}},
    {U'O', {"01110", "10001", "10001", "10001", "10001", "10001", "01110"}},
    {U'P', {"11110", "10001", "10001", "11110", "10000", "10000", "10000"}},
    {U'Q', {"01110", "10001", "10001", "10001", "10101", "10010", "01101"}},
    {U'R', {"11110", "10001", "10001", "11110", "10100", "10010", "10001"}},
    {U'S', {"01111", "10000", "10000", "01110", "00001", "00001", "11110"}},
    {U'T', {"11111", "00100", "00100", "00100", "00100", "00100", "00100"}},
    {U'U', {"10001", "10001", "10001", "10001", "10001", "10001", "01110"}},
    {U'V', {"10001", "10001", "10001", "10001", "10001", "01010", "00100"}},
    {U'W', {"10001", "10001", "10001", "10101", "10101", "10101", "01010"}},
    {U'X', {"10001", "10001", "01010", "00100", "01010", "10001", "10001"}},
    {U'Y', {"10001", "10001", "10001", "01010", "00100", "00100", "00100"}},
    {U'Z', {"11111", "00001", "00010", "00100", "01000", "10000", "11111"}},
    {U'0', {"01110", "10001", "10011", "10101", "11001", "10001", "01110"}},
    {U'1', {"00100", "01100", "00100", "00100", "00100", "00100", "01110"}},
    {U'2', {"01110", "10001", "00001", "00010", "00100", "01000", "11111"}},
    {U'3', {"11111", "00010", "00100", "00010", "00001", "10001", "01110"}},
    {U'4', {"00010", "00110", "01010", "10010", "11111", "00010", "00010"}},
    {U'5', {"11111", "10000", "11110", "00001", "00001", "10001", "01110"}},
    {U'6', {"00110", "01000", "10000", "11110", "10001", "10001", "01110"}},
    {U'7', {"11111", "00001", "00010", "00100", "01000", "01000", "01000"}},
    {U'8', {"01110", "10001", "10001", "01110", "10001", "10001", "01110"}},
    {U'9', {"01110", "10001", "10001", "01111", "00001", "00010", "01100"}},
    {U'-', {"00000", "00000", "00000", "11111", "00000", "00000", "00000"}},
    {U'.', {"00000", "00000", "00000", "00000", "00000", "01100", "01100"}},
    {U'!', {"00100", "00100", "00100", "00100", "00100", "00000", "00100"}},
    {U'→', {"00000", "00100", "00010", "11111", "00010", "00100", "00000"}},
    {U'←', {"00000", "00100", "01000", "11111", "01000", "00100", "00000"}},
    {U'↑', {"00100", "01110", "10101", "00100", "00100", "00100", "00100"}},
    {U'↓', {"00100", "00100", "00100", "00100", "10101", "01110", "00100"}},
};
// clang-format on

}  // namespace

std::optional<Glyph> glyph_for(char32_t codepoint) {
    for (const auto& g : kFont) {
        if (g.codepoint != codepoint) continue;
        Glyph out{};
        for (int r = 0; r < kGlyphHeight; ++r) {
            std::uint8_t bits = 0;
            for (int c = 0; c < kGlyphWidth; ++c) bits = static_cast<std::uint8_t>((bits << 1) | (g.rows[r][c] == '1'));
            out[r] = bits;
        }
        return out;
    }
    return std::nullopt;
}

std::string supported_glyphs() {
    std::vector<char32_t> cps;
    for (const auto& g : kFont) cps.push_back(g.codepoint);
    return utf8_encode(cps);
}

}  // namespace arsent
