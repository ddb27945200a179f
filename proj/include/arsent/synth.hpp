#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "arsent/core.hpp"
#include "arsent/image.hpp"

namespace arsent {

struct SynthSpec {
    std::uint64_t seed = 42;
    int count = 10;
    std::map<SceneLabel, double> mix = {{SceneLabel::none, 0.4}, {SceneLabel::obstruction, 0.3},
                                        {SceneLabel::vim, 0.3}};
    int width = 640;
    int height = 480;
    std::string glyph_set;  // empty = every glyph the font supports
    double obstruction_min_cover = 0.6;

    /// Throws ConfigError (bad mix, sizes, or glyph set).
    void validate() const;
};

/// Parses "none:0.4,obstruction:0.3,vim:0.3".
std::map<SceneLabel, double> parse_mix(std::string_view text);

struct RenderedText {
    PixelRect bounds;            // ink block in image coordinates
    RasterMask ink;              // bounds.w x bounds.h, local coordinates
    std::vector<OcrToken> tokens;  // one per space-separated word, image coordinates
};

/// Lays out `text` with the 5x7 font: glyph advance 5*scale plus a gap of
/// 1*scale; a space occupies one glyph cell. Throws Error listing unsupported
/// glyphs, or on empty text / zero scale.
RenderedText render_sign(std::string_view text, int origin_x, int origin_y, int scale);

/// RGB canvas used by the synthesizer.
struct Canvas {
    int width = 0;
    int height = 0;
    PixelBuffer rgb;

    Canvas(int w, int h);
    void fill(PixelRect rect, std::array<std::uint8_t, 3> color);
    void paint(const RasterMask& mask, std::array<std::uint8_t, 3> color);  // full-size mask
    void paint_ink(const RenderedText& text, std::array<std::uint8_t, 3> color);
};

/// One generated scene, in memory.
struct SynthScene {
    std::string id;
    Canvas raw;
    Canvas ar;
    RasterMask content_mask;
    GroundTruth truth;
};

/// Deterministic scene `index` of `spec` (sub-seed = seed XOR index).
SynthScene generate_scene(const SynthSpec& spec, std::uint64_t index);

/// Writes `<out>/scenes/<id>/{raw.png,ar.png,content_mask.png,truth.json}` and
/// `<out>/manifest.jsonl` (written last). Returns the manifest path.
std::filesystem::path synthesize(const SynthSpec& spec, const std::filesystem::path& out_dir,
                                 int parallelism = 0);

}  // namespace arsent
