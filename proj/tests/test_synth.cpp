#include <doctest.h>

#include <algorithm>

#include "arsent/errors.hpp"
#include "arsent/glyphs.hpp"
#include "arsent/manifest.hpp"
#include "arsent/synth.hpp"
#include "arsent/vim.hpp"
#include "support.hpp"

using namespace arsent;
namespace fs = std::filesystem;

namespace {

RasterMask rect_mask(int w, int h, const BoundingBox& b) { return RasterMask::from_rect(w, h, b.rect()); }

// Fraction of the key object rectangle covered, counted pixel by pixel.
double pixel_cover(const RasterMask& content, const BoundingBox& b) {
    std::uint64_t covered = 0;
    for (int y = b.y; y < b.y + b.h; ++y)
        for (int x = b.x; x < b.x + b.w; ++x) covered += content.get(x, y) ? 1 : 0;
    return static_cast<double>(covered) / (static_cast<double>(b.w) * b.h);
}

}  // namespace

TEST_CASE("render_sign layout") {
    const auto stop = render_sign("STOP", 10, 20, 2);
    CHECK(stop.bounds == PixelRect{10, 20, 4 * 5 * 2 + 3 * 2, 14});
    REQUIRE(stop.tokens.size() == 1);
    CHECK(stop.tokens[0].text == "STOP");
    CHECK(stop.tokens[0].box == BoundingBox{10, 20, 46, 14, 1.0});
    CHECK(area(stop.ink) > 0);
    CHECK(stop.ink.width() == 46);

    const auto er = render_sign("EMERGENCY →", 0, 0, 3);
    REQUIRE(er.tokens.size() == 2);
    CHECK(er.tokens[0].text == "EMERGENCY");
    CHECK(er.tokens[1].text == "→");
    const auto& a = er.tokens[0].box;
    const auto& b = er.tokens[1].box;
    CHECK(a.x + a.w < b.x);
    CHECK(b.x == 10 * 6 * 3);
    CHECK(b.x + b.w == er.bounds.w);

    CHECK_THROWS_AS(render_sign("", 0, 0, 1), Error);
    CHECK_THROWS_AS(render_sign("STOP", 0, 0, 0), Error);
    CHECK_THROWS_WITH_AS(render_sign("ST~P", 0, 0, 1), doctest::Contains("~"), Error);
    CHECK(glyph_for(U' '));
    CHECK_FALSE(glyph_for(U'~'));
}

TEST_CASE("spec validation and mix parsing") {
    const auto mix = parse_mix("none:0.5,vim:0.5");
    CHECK(mix.at(SceneLabel::none) == 0.5);
    CHECK(mix.at(SceneLabel::vim) == 0.5);
    CHECK_THROWS_AS(parse_mix("none"), ConfigError);
    CHECK_THROWS_AS(parse_mix("blue:1"), ConfigError);
    CHECK_THROWS_AS(parse_mix("none:x"), ConfigError);

    SynthSpec spec;
    CHECK_NOTHROW(spec.validate());
    spec.mix = {{SceneLabel::none, 0.5}};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = {};
    spec.width = 10;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = {};
    spec.glyph_set = "AB~";
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = {};
    spec.glyph_set = "Q";  // no sign can be rendered
    CHECK_THROWS_AS(generate_scene(spec, 0), Error);
}

TEST_CASE("same seed gives byte-identical output regardless of parallelism") {
    testing::TempDir a, b;
    SynthSpec spec;
    spec.seed = 1234;
    spec.count = 12;
    synthesize(spec, a.path(), 1);
    synthesize(spec, b.path(), 3);
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(a.path())) {
        if (e.is_regular_file()) files.push_back(fs::relative(e.path(), a.path()));
    }
    CHECK(files.size() == 1 + 12 * 4);
    for (const auto& f : files) {
        CAPTURE(f);
        CHECK(read_file(a.path() / f) == read_file(b.path() / f));
    }

    testing::TempDir c;
    spec.seed = 1235;
    synthesize(spec, c.path(), 1);
    CHECK(read_file(a.path() / "manifest.jsonl") == read_file(c.path() / "manifest.jsonl"));
    CHECK(read_file(a.path() / "scenes/scene_00000/raw.png") != read_file(c.path() / "scenes/scene_00000/raw.png"));
}

TEST_CASE("obstruction scenes cover their targets") {
    SynthSpec spec;
    spec.seed = 77;
    spec.mix = {{SceneLabel::obstruction, 1.0}};
    for (std::uint64_t i = 0; i < 40; ++i) {
        const auto s = generate_scene(spec, i);
        CAPTURE(s.id);
        REQUIRE(s.truth.label == SceneLabel::obstruction);
        REQUIRE(s.truth.targets.size() == 1);
        for (const auto& k : s.truth.key_objects) {
            const double cover = pixel_cover(s.content_mask, k.box);
            const bool target = k.name == s.truth.targets[0];
            if (target) {
                CHECK(cover >= 0.6);
            } else {
                CHECK(cover == 0.0);
            }
        }
        CHECK(s.truth.ar_tokens.size() <= s.truth.raw_tokens.size());
    }
}

TEST_CASE("clean scenes never touch key objects") {
    SynthSpec spec;
    spec.seed = 5;
    spec.mix = {{SceneLabel::none, 1.0}};
    for (std::uint64_t i = 0; i < 40; ++i) {
        const auto s = generate_scene(spec, i);
        CHECK(area(s.content_mask) > 0);
        for (const auto& k : s.truth.key_objects) {
            CHECK(testing::naive_intersection(s.content_mask, rect_mask(spec.width, spec.height, k.box)) == 0);
        }
        CHECK(s.truth.ar_tokens == s.truth.raw_tokens);
        CHECK(s.raw.rgb != s.ar.rgb);
    }
}

TEST_CASE("vim scenes: sidecar text matches the token diff") {
    SynthSpec spec;
    spec.seed = 9;
    spec.mix = {{SceneLabel::vim, 1.0}};
    std::map<std::string, int> formats;
    for (std::uint64_t i = 0; i < 60; ++i) {
        const auto s = generate_scene(spec, i);
        CAPTURE(s.id);
        REQUIRE(s.truth.vim_format);
        REQUIRE(s.truth.vim_purpose);
        ++formats[*s.truth.vim_format];
        for (const auto& k : s.truth.key_objects) CHECK(pixel_cover(s.content_mask, k.box) < 0.25);
        const auto diff = diff_tokens(s.truth.raw_tokens, s.truth.ar_tokens, 24.0);
        if (*s.truth.vim_format == taxonomy::kTextAddition) {
            CHECK(diff.modifications.empty());
            CHECK(diff.removals.empty());
            std::string added;
            for (const auto& t : diff.additions) added += (added.empty() ? "" : " ") + t.text;
            CHECK(added == *s.truth.text_after);
        } else {
            REQUIRE(diff.modifications.size() == 1);
            CHECK(diff.additions.empty());
            CHECK(diff.removals.empty());
            CHECK(diff.modifications[0].before.text == *s.truth.text_before);
            CHECK(diff.modifications[0].after.text == *s.truth.text_after);
            CHECK(diff.modifications[0].edit_distance == 1);
        }
    }
    CHECK(formats.size() == 3);
}

TEST_CASE("label mix is honored on average and scenes validate") {
    testing::TempDir dir;
    SynthSpec spec;
    spec.seed = 3;
    spec.count = 60;
    synthesize(spec, dir.path(), 2);
    const auto pairs = load_manifest(dir / "manifest.jsonl");
    REQUIRE(pairs.size() == 60);
    std::map<SceneLabel, int> counts;
    for (const auto& p : pairs) {
        ++counts[p.truth->label];
        CHECK(p.raw.digest() == p.truth->raw_digest);
        CHECK(p.ar.digest() == p.truth->ar_digest);
    }
    for (const auto& [label, expected] : spec.mix) {
        CHECK(counts[label] > 0);
        CHECK(std::abs(counts[label] / 60.0 - expected) < 0.2);
    }

    testing::TempDir empty;
    spec.count = 0;
    synthesize(spec, empty.path());
    CHECK(read_file(empty / "manifest.jsonl").empty());
}
