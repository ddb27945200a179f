#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace arsent {

inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;

/// 5x7 block glyph; row r bit (4 - c) set means column c is inked.
using Glyph = std::array<std::uint8_t, kGlyphHeight>;

/// Glyph for a code point, or nullopt when the font lacks it. Space is a blank glyph.
std::optional<Glyph> glyph_for(char32_t codepoint);

/// Every code point the font can render, as UTF-8.
std::string supported_glyphs();

inline constexpr char32_t kArrowRight = U'→';
inline constexpr char32_t kArrowLeft = U'←';

}  // namespace arsent
