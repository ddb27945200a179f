#include "arsent/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <thread>

#include "arsent/errors.hpp"
#include "arsent/glyphs.hpp"
#include "arsent/manifest.hpp"
#include "arsent/rng.hpp"
#include "arsent/vim.hpp"

namespace arsent {

namespace {

using Color = std::array<std::uint8_t, 3>;

struct SignTemplate {
    const char* text;
    const char* name;
    Color background;
    Color ink;
};

constexpr Color kWhite{245, 245, 245};
constexpr Color kBlack{20, 20, 20};

constexpr SignTemplate kSigns[] = {
    {"STOP", "stop sign", {200, 30, 30}, kWhite},
    {"EXIT", "exit sign", {20, 140, 60}, kWhite},
    {"EMERGENCY →", "emergency room sign", {30, 70, 170}, kWhite},
    {"EXIT ←", "exit direction sign", {20, 120, 50}, kWhite},
    {"NO ENTRY", "no entry sign", {180, 20, 40}, kWhite},
    {"WET FLOOR", "wet floor sign", {230, 190, 30}, kBlack},
    {"GATE 12", "gate sign", {60, 60, 70}, kWhite},
    {"PLATFORM 3 →", "platform sign", {20, 40, 110}, kWhite},
    {"FIRE EXIT ↑", "fire exit sign", {10, 150, 70}, kWhite},
    {"SPEED 30", "speed limit sign", {235, 235, 235}, kBlack},
    {"YIELD", "yield sign", {220, 60, 20}, kWhite},
    {"RESTROOMS ←", "restroom sign", {40, 90, 160}, kWhite},
};

struct Addition {
    const char* text;
    std::string_view purpose;
};

constexpr Addition kAdditions[] = {
    {"FREE WIFI", taxonomy::kDistraction},   {"TURN LEFT", taxonomy::kMisdirection},
    {"EXIT →", taxonomy::kMisdirection},      {"CLOSED", taxonomy::kMisinformation},
    {"NO EXIT", taxonomy::kMisinformation},  {"ELEVATOR ←", taxonomy::kMisdirection},
};

constexpr Color kContentColors[] = {{255, 0, 200}, {0, 220, 255}, {255, 140, 0}, {120, 255, 60}, {250, 250, 90}};

// Sign panels keep this much clearance from each other; added text panels keep
// more so their tokens never pair with sign tokens in the OCR diff.
constexpr int kSignGap = 12;
constexpr int kAdditionGap = 40;
// VIM overlays must stay well below the default detection threshold.
constexpr double kVimMaxCover = 0.25;
// A token is unreadable in the AR view once this much of its box is covered.
constexpr double kTokenOcclusion = 0.5;

enum class VimVariant { substitution, arrow_flip, addition };

struct PlacedSign {
    const SignTemplate* tmpl;
    int scale;
    PixelRect panel;
    RenderedText text;
};

bool has_arrow(std::string_view text) {
    for (char32_t cp : utf8_codepoints(text)) {
        if (cp == U'→' || cp == U'←' || cp == U'↑' || cp == U'↓') return true;
    }
    return false;
}

char32_t flipped_arrow(char32_t cp) {
    switch (cp) {
        case U'→': return U'←';
        case U'←': return U'→';
        case U'↑': return U'↓';
        case U'↓': return U'↑';
        default: return cp;
    }
}

bool renderable(std::string_view text, const std::vector<char32_t>& glyphs) {
    for (char32_t cp : utf8_codepoints(text)) {
        if (cp != U' ' && std::find(glyphs.begin(), glyphs.end(), cp) == glyphs.end()) return false;
    }
    return true;
}

PixelRect inflate(PixelRect r, int by) { return {r.x - by, r.y - by, r.w + 2 * by, r.h + 2 * by}; }

bool overlaps(PixelRect a, PixelRect b) {
    return a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h;
}

PixelRect clip(PixelRect r, int w, int h) {
    const int x0 = std::max(r.x, 0), y0 = std::max(r.y, 0);
    const int x1 = std::min(r.x + r.w, w), y1 = std::min(r.y + r.h, h);
    return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

int text_width(std::size_t glyphs, int scale) {
    return static_cast<int>(glyphs) * kGlyphWidth * scale + static_cast<int>(glyphs - 1) * scale;
}

/// Fat arrow filling `box`, pointing right or left.
RasterMask arrow_mask(int width, int height, PixelRect box, bool right) {
    RasterMask m(width, height);
    const double shaft_len = 0.55 * box.w;
    const double half_h = box.h / 2.0;
    for (int v = 0; v < box.h; ++v) {
        for (int u = 0; u < box.w; ++u) {
            const double along = right ? u + 0.5 : box.w - u - 0.5;
            const double off = std::abs(v + 0.5 - half_h);
            bool inside;
            if (along < shaft_len) {
                inside = off <= 0.3 * box.h;
            } else {
                inside = off <= half_h * (box.w - along) / (box.w - shaft_len);
            }
            if (inside) m.set(box.x + u, box.y + v);
        }
    }
    return m;
}

class SceneBuilder {
public:
    SceneBuilder(const SynthSpec& spec, std::uint64_t index)
        : spec_(spec), rng_(spec.seed ^ index), raw_(spec.width, spec.height), content_(spec.width, spec.height) {
        const auto glyphs = spec.glyph_set.empty() ? supported_glyphs() : spec.glyph_set;
        glyphs_ = utf8_codepoints(glyphs);
        char buf[32];
        std::snprintf(buf, sizeof buf, "scene_%05llu", static_cast<unsigned long long>(index));
        id_ = buf;
    }

    SynthScene build() {
        const SceneLabel label = pick_label();
        VimVariant variant = VimVariant::substitution;
        if (label == SceneLabel::vim) variant = pick_variant();
        draw_background();
        place_signs(label == SceneLabel::vim && variant == VimVariant::arrow_flip);

        for (const auto& s : signs_) {
            for (const auto& t : s.text.tokens) raw_tokens_.push_back(t);
        }
        Canvas ar = raw_;
        GroundTruth truth;
        truth.label = label;
        for (const auto& s : signs_) {
            truth.key_objects.push_back({s.tmpl->name, {s.panel.x, s.panel.y, s.panel.w, s.panel.h, 1.0},
                                         RasterMask::from_rect(spec_.width, spec_.height, s.panel)});
        }
        std::vector<OcrToken> ar_tokens = raw_tokens_;

        switch (label) {
            case SceneLabel::none: add_disjoint_content(ar); break;
            case SceneLabel::obstruction: add_obstruction(ar, truth, ar_tokens); break;
            case SceneLabel::vim: add_vim(variant, ar, truth, ar_tokens); break;
        }

        std::stable_sort(ar_tokens.begin(), ar_tokens.end(), [](const OcrToken& a, const OcrToken& b) {
            return a.box.y != b.box.y ? a.box.y < b.box.y : a.box.x < b.box.x;
        });
        auto raw_sorted = raw_tokens_;
        std::stable_sort(raw_sorted.begin(), raw_sorted.end(), [](const OcrToken& a, const OcrToken& b) {
            return a.box.y != b.box.y ? a.box.y < b.box.y : a.box.x < b.box.x;
        });
        truth.raw_tokens = std::move(raw_sorted);
        truth.ar_tokens = std::move(ar_tokens);
        truth.raw_digest = image_digest(raw_.width, raw_.height, raw_.rgb);
        truth.ar_digest = image_digest(ar.width, ar.height, ar.rgb);
        return {id_, std::move(raw_), std::move(ar), std::move(content_), std::move(truth)};
    }

private:
    SceneLabel pick_label() {
        const double u = rng_.uniform01();
        double acc = 0.0;
        SceneLabel last = SceneLabel::none;
        for (const auto& [label, p] : spec_.mix) {
            if (p <= 0.0) continue;
            acc += p;
            last = label;
            if (u < acc) return label;
        }
        return last;
    }

    VimVariant pick_variant() {
        bool any_arrow = false;
        for (const auto& t : kSigns) {
            if (has_arrow(t.text) && renderable(t.text, glyphs_) && renderable_flip(t.text)) any_arrow = true;
        }
        const std::uint64_t n = any_arrow ? 3 : 2;
        const auto pick = rng_.below(n);
        if (pick == 0) return VimVariant::substitution;
        if (pick == 1) return VimVariant::addition;
        return VimVariant::arrow_flip;
    }

    bool renderable_flip(std::string_view text) const {
        for (char32_t cp : utf8_codepoints(text)) {
            if (flipped_arrow(cp) != cp && std::find(glyphs_.begin(), glyphs_.end(), flipped_arrow(cp)) == glyphs_.end())
                return false;
        }
        return true;
    }

    void draw_background() {
        const int w = spec_.width, h = spec_.height;
        const int horizon = h / 2 + static_cast<int>(rng_.between(-h / 8, h / 8));
        const Color sky{static_cast<std::uint8_t>(rng_.between(150, 200)), static_cast<std::uint8_t>(rng_.between(170, 210)),
                        static_cast<std::uint8_t>(rng_.between(200, 240))};
        const Color ground{static_cast<std::uint8_t>(rng_.between(90, 130)), static_cast<std::uint8_t>(rng_.between(90, 120)),
                           static_cast<std::uint8_t>(rng_.between(80, 110))};
        for (int y = 0; y < h; ++y) {
            const Color& base = y < horizon ? sky : ground;
            const int shade = (y < horizon ? y : h - y) * 30 / h;
            Color c{};
            for (int k = 0; k < 3; ++k) c[k] = static_cast<std::uint8_t>(std::clamp(base[k] - shade, 0, 255));
            raw_.fill({0, y, w, 1}, c);
        }
        const int buildings = static_cast<int>(rng_.between(2, 5));
        for (int i = 0; i < buildings; ++i) {
            const int bw = static_cast<int>(rng_.between(w / 10, w / 4));
            const int bh = static_cast<int>(rng_.between(h / 6, h / 2));
            const int bx = static_cast<int>(rng_.between(0, w - bw));
            const auto g = static_cast<std::uint8_t>(rng_.between(70, 160));
            raw_.fill({bx, horizon - bh, bw, bh}, {g, static_cast<std::uint8_t>(g + 5), static_cast<std::uint8_t>(g + 12)});
        }
    }

    bool try_place(const SignTemplate& t, int scale) {
        const auto cps = utf8_codepoints(t.text);
        const int tw = text_width(cps.size(), scale);
        const int th = kGlyphHeight * scale;
        const int pad = 3 * scale;
        const int pw = tw + 2 * pad, ph = th + 2 * pad;
        if (pw + 8 > spec_.width || ph + 8 > spec_.height) return false;
        for (int attempt = 0; attempt < 200; ++attempt) {
            const int px = static_cast<int>(rng_.between(4, spec_.width - pw - 4));
            const int py = static_cast<int>(rng_.between(4, spec_.height - ph - 4));
            const PixelRect panel{px, py, pw, ph};
            const bool clear = std::none_of(signs_.begin(), signs_.end(), [&](const PlacedSign& s) {
                return overlaps(inflate(s.panel, kSignGap), panel);
            });
            if (!clear) continue;
            PlacedSign sign{&t, scale, panel, render_sign(t.text, px + pad, py + pad, scale)};
            raw_.fill(panel, t.background);
            raw_.paint_ink(sign.text, t.ink);
            signs_.push_back(std::move(sign));
            return true;
        }
        return false;
    }

    void place_signs(bool need_arrow) {
        std::vector<const SignTemplate*> pool;
        for (const auto& t : kSigns) {
            if (renderable(t.text, glyphs_) && (!has_arrow(t.text) || renderable_flip(t.text))) pool.push_back(&t);
        }
        if (pool.empty()) throw Error("glyph set cannot render any sign text");
        const int want = static_cast<int>(rng_.between(1, 3));
        for (int i = 0; i < want && !pool.empty(); ++i) {
            std::vector<const SignTemplate*> choices;
            for (auto* t : pool) {
                if (i == 0 && need_arrow && !has_arrow(t->text)) continue;
                choices.push_back(t);
            }
            if (choices.empty()) choices = pool;
            const SignTemplate* t = choices[rng_.below(choices.size())];
            pool.erase(std::find(pool.begin(), pool.end(), t));
            for (int scale = static_cast<int>(rng_.between(2, 4)); scale >= 1; --scale) {
                if (try_place(*t, scale)) break;
            }
        }
        if (signs_.empty()) throw Error("could not place any sign on a " + std::to_string(spec_.width) + "x" +
                                        std::to_string(spec_.height) + " image");
    }

    Color content_color() { return kContentColors[rng_.below(std::size(kContentColors))]; }

    bool disjoint_from_signs(const RasterMask& mask, int gap) const {
        for (const auto& s : signs_) {
            const PixelRect r = clip(inflate(s.panel, gap), spec_.width, spec_.height);
            if (intersection_area(mask, RasterMask::from_rect(spec_.width, spec_.height, r)) > 0) return false;
        }
        return true;
    }

    RasterMask random_shape(PixelRect box) {
        const auto kind = rng_.below(3);
        if (kind == 0) return arrow_mask(spec_.width, spec_.height, box, rng_.bernoulli(0.5));
        RasterMask m = RasterMask::from_rect(spec_.width, spec_.height, box);
        if (kind == 2 && box.w > 8 && box.h > 8) {
            // Panel with a cut-out window.
            m.fill_rect({box.x + box.w / 4, box.y + box.h / 4, box.w / 2, box.h / 2}, false);
        }
        return m;
    }

    void commit_content(Canvas& ar, const RasterMask& mask, Color color) {
        ar.paint(mask, color);
        content_ = content_ | mask;
    }

    void add_disjoint_content(Canvas& ar) {
        for (int size_div = 1; size_div <= 8; size_div *= 2) {
            for (int attempt = 0; attempt < 300; ++attempt) {
                const int bw = std::max(4, static_cast<int>(rng_.between(40, 160)) / size_div);
                const int bh = std::max(4, static_cast<int>(rng_.between(30, 120)) / size_div);
                if (bw >= spec_.width || bh >= spec_.height) continue;
                const PixelRect box{static_cast<int>(rng_.between(0, spec_.width - bw)),
                                    static_cast<int>(rng_.between(0, spec_.height - bh)), bw, bh};
                RasterMask shape = random_shape(box);
                if (area(shape) == 0 || !disjoint_from_signs(shape, 1)) continue;
                commit_content(ar, shape, content_color());
                return;
            }
        }
        throw Error("no free space for disjoint virtual content in scene " + id_);
    }

    double cover_of(const PlacedSign& s, const RasterMask& mask) const {
        return obstruction_ratio(RasterMask::from_rect(spec_.width, spec_.height, s.panel), mask);
    }

    void drop_occluded_tokens(std::vector<OcrToken>& tokens) const {
        std::erase_if(tokens, [&](const OcrToken& t) {
            const auto box = RasterMask::from_rect(spec_.width, spec_.height, t.box.rect());
            return obstruction_ratio(box, content_) >= kTokenOcclusion;
        });
    }

    void add_obstruction(Canvas& ar, GroundTruth& truth, std::vector<OcrToken>& ar_tokens) {
        const std::size_t target = rng_.below(signs_.size());
        const PlacedSign& sign = signs_[target];
        std::optional<RasterMask> chosen;
        for (int attempt = 0; attempt < 50 && !chosen; ++attempt) {
            RasterMask shape;
            if (rng_.below(3) == 0) {
                // Arrow across the sign, larger than the panel.
                const int gw = sign.panel.w * static_cast<int>(rng_.between(130, 170)) / 100;
                const int gh = sign.panel.h * static_cast<int>(rng_.between(150, 220)) / 100;
                PixelRect box{sign.panel.x + (sign.panel.w - gw) / 2 + static_cast<int>(rng_.between(-6, 6)),
                              sign.panel.y + (sign.panel.h - gh) / 2 + static_cast<int>(rng_.between(-6, 6)), gw, gh};
                shape = arrow_mask(spec_.width, spec_.height, clip(box, spec_.width, spec_.height), rng_.bernoulli(0.5));
            } else {
                const double fw = 0.78 + 0.22 * rng_.uniform01();
                const double fh = 0.78 + 0.22 * rng_.uniform01();
                const int cw = static_cast<int>(std::ceil(fw * sign.panel.w));
                const int ch = static_cast<int>(std::ceil(fh * sign.panel.h));
                PixelRect box{sign.panel.x + static_cast<int>(rng_.between(0, sign.panel.w - cw)),
                              sign.panel.y + static_cast<int>(rng_.between(0, sign.panel.h - ch)), cw, ch};
                box.x -= static_cast<int>(rng_.between(0, 24));
                box.y -= static_cast<int>(rng_.between(0, 24));
                box.w += static_cast<int>(rng_.between(0, 48));
                box.h += static_cast<int>(rng_.between(0, 48));
                shape = RasterMask::from_rect(spec_.width, spec_.height, clip(box, spec_.width, spec_.height));
            }
            if (cover_of(sign, shape) < spec_.obstruction_min_cover) continue;
            bool others_clear = true;
            for (std::size_t i = 0; i < signs_.size(); ++i) {
                if (i != target && intersection_area(shape, RasterMask::from_rect(spec_.width, spec_.height,
                                                                                  signs_[i].panel)) > 0) {
                    others_clear = false;
                }
            }
            if (others_clear) chosen = std::move(shape);
        }
        if (!chosen) {
            // Full cover within the clearance band.
            chosen = RasterMask::from_rect(spec_.width, spec_.height,
                                           clip(inflate(sign.panel, kSignGap / 2 - 1), spec_.width, spec_.height));
        }
        commit_content(ar, *chosen, content_color());
        truth.targets.push_back(sign.tmpl->name);
        drop_occluded_tokens(ar_tokens);
    }

    /// Replaces one glyph cell of a sign with a patch showing `replacement`.
    void overlay_glyph(Canvas& ar, const PlacedSign& sign, std::size_t glyph_index, char32_t replacement) {
        const int s = sign.scale;
        const int gx = sign.text.bounds.x + static_cast<int>(glyph_index) * (kGlyphWidth + 1) * s;
        const int gy = sign.text.bounds.y;
        const PixelRect patch{gx - s / 2, gy - s, kGlyphWidth * s + 2 * (s / 2), kGlyphHeight * s + 2 * s};
        RasterMask mask = RasterMask::from_rect(spec_.width, spec_.height, patch);
        ar.fill(patch, sign.tmpl->background);
        const auto glyph = glyph_for(replacement);
        for (int r = 0; r < kGlyphHeight; ++r) {
            for (int c = 0; c < kGlyphWidth; ++c) {
                if ((*glyph)[r] >> (kGlyphWidth - 1 - c) & 1u) ar.fill({gx + c * s, gy + r * s, s, s}, sign.tmpl->ink);
            }
        }
        content_ = content_ | mask;
        if (cover_of(sign, content_) >= kVimMaxCover) throw Error("VIM overlay covers too much of " + std::string(sign.tmpl->name));
    }

    void replace_token_text(std::vector<OcrToken>& tokens, const OcrToken& before, const std::string& after) {
        for (auto& t : tokens) {
            if (t == before) {
                t.text = after;
                return;
            }
        }
    }

    void add_vim(VimVariant variant, Canvas& ar, GroundTruth& truth, std::vector<OcrToken>& ar_tokens) {
        if (variant == VimVariant::addition) {
            add_text_panel(ar, truth, ar_tokens);
            return;
        }
        // Candidate (sign, token, glyph index within the sign text).
        struct Site {
            std::size_t sign;
            std::size_t token;
            std::size_t glyph;
            std::size_t char_in_token;
        };
        std::vector<Site> sites;
        for (std::size_t si = 0; si < signs_.size(); ++si) {
            const auto cps = utf8_codepoints(signs_[si].tmpl->text);
            std::size_t token = 0, in_token = 0;
            for (std::size_t gi = 0; gi < cps.size(); ++gi) {
                if (cps[gi] == U' ') {
                    if (gi > 0 && cps[gi - 1] != U' ') ++token;
                    in_token = 0;
                    continue;
                }
                const bool arrow = flipped_arrow(cps[gi]) != cps[gi];
                const bool alnum = cps[gi] < 128 && std::isalnum(static_cast<int>(cps[gi]));
                if ((variant == VimVariant::arrow_flip && arrow) || (variant == VimVariant::substitution && alnum)) {
                    sites.push_back({si, token, gi, in_token});
                }
                ++in_token;
            }
        }
        if (sites.empty()) {
            add_text_panel(ar, truth, ar_tokens);
            return;
        }
        const Site site = sites[rng_.below(sites.size())];
        const PlacedSign& sign = signs_[site.sign];
        const OcrToken before = sign.text.tokens[site.token];
        auto cps = utf8_codepoints(before.text);
        char32_t replacement;
        if (variant == VimVariant::arrow_flip) {
            replacement = flipped_arrow(cps[site.char_in_token]);
            truth.vim_format = std::string(taxonomy::kSymbolReplacement);
            truth.vim_purpose = std::string(taxonomy::kMisdirection);
        } else {
            const char32_t original = cps[site.char_in_token];
            const bool digit = original >= U'0' && original <= U'9';
            std::vector<char32_t> options;
            for (char32_t g : glyphs_) {
                const bool g_digit = g >= U'0' && g <= U'9';
                const bool g_upper = g >= U'A' && g <= U'Z';
                if (g != original && (digit ? g_digit : g_upper)) options.push_back(g);
            }
            if (options.empty()) {
                add_text_panel(ar, truth, ar_tokens);
                return;
            }
            replacement = options[rng_.below(options.size())];
            truth.vim_format = std::string(taxonomy::kTextAlteration);
            truth.vim_purpose = std::string(taxonomy::kMisinformation);
        }
        cps[site.char_in_token] = replacement;
        const std::string after = utf8_encode(cps);
        overlay_glyph(ar, sign, site.glyph, replacement);
        replace_token_text(ar_tokens, before, after);
        truth.text_before = before.text;
        truth.text_after = after;
    }

    void add_text_panel(Canvas& ar, GroundTruth& truth, std::vector<OcrToken>& ar_tokens) {
        std::vector<const Addition*> options;
        for (const auto& a : kAdditions) {
            if (renderable(a.text, glyphs_)) options.push_back(&a);
        }
        if (options.empty()) throw Error("glyph set cannot render any added text");
        const Addition& add = *options[rng_.below(options.size())];
        const auto cps = utf8_codepoints(add.text);
        for (int scale = static_cast<int>(rng_.between(2, 3)); scale >= 1; --scale) {
            const int pad = 3 * scale;
            const int pw = text_width(cps.size(), scale) + 2 * pad;
            const int ph = kGlyphHeight * scale + 2 * pad;
            if (pw + 2 > spec_.width || ph + 2 > spec_.height) continue;
            for (int attempt = 0; attempt < 300; ++attempt) {
                const PixelRect panel{static_cast<int>(rng_.between(1, spec_.width - pw - 1)),
                                      static_cast<int>(rng_.between(1, spec_.height - ph - 1)), pw, ph};
                const bool clear = std::none_of(signs_.begin(), signs_.end(), [&](const PlacedSign& s) {
                    return overlaps(inflate(s.panel, kAdditionGap), panel);
                });
                if (!clear) continue;
                const auto rendered = render_sign(add.text, panel.x + pad, panel.y + pad, scale);
                const SignTemplate& look = kSigns[rng_.below(std::size(kSigns))];
                ar.fill(panel, look.background);
                ar.paint_ink(rendered, look.ink);
                content_ = content_ | RasterMask::from_rect(spec_.width, spec_.height, panel);
                for (const auto& t : rendered.tokens) ar_tokens.push_back(t);
                truth.vim_format = std::string(taxonomy::kTextAddition);
                truth.vim_purpose = std::string(add.purpose);
                truth.text_after = add.text;
                return;
            }
        }
        throw Error("no free space for an added text panel in scene " + id_);
    }

    const SynthSpec& spec_;
    Rng rng_;
    std::vector<char32_t> glyphs_;
    std::string id_;
    Canvas raw_;
    RasterMask content_;
    std::vector<PlacedSign> signs_;
    std::vector<OcrToken> raw_tokens_;
};

}  // namespace

void SynthSpec::validate() const {
    if (count < 0) throw ConfigError("count must be >= 0");
    if (width < 64 || height < 64 || width > kMaxImageSide || height > kMaxImageSide) {
        throw ConfigError("image size must be within 64..8192 per side");
    }
    double sum = 0.0;
    for (const auto& [label, p] : mix) {
        if (!(p >= 0.0)) throw ConfigError("mix probabilities must be non-negative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("mix probabilities must sum to 1 (got " + std::to_string(sum) + ")");
    if (!(obstruction_min_cover > 0.0 && obstruction_min_cover <= 1.0)) {
        throw ConfigError("obstruction_min_cover must be in (0,1]");
    }
    for (char32_t cp : utf8_codepoints(glyph_set)) {
        if (!glyph_for(cp)) throw ConfigError("glyph set contains unsupported glyph '" + utf8_encode(std::span(&cp, 1)) + "'");
    }
}

std::map<SceneLabel, double> parse_mix(std::string_view text) {
    std::map<SceneLabel, double> mix;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) throw ConfigError("mix entry must be label:probability, got '" + std::string(item) + "'");
        SceneLabel label;
        try {
            label = parse_scene_label(item.substr(0, colon));
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
        try {
            std::size_t used = 0;
            const std::string num(item.substr(colon + 1));
            mix[label] = std::stod(num, &used);
            if (used != num.size()) throw std::invalid_argument(num);
        } catch (const std::exception&) {
            throw ConfigError("mix probability is not a number in '" + std::string(item) + "'");
        }
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return mix;
}

RenderedText render_sign(std::string_view text, int origin_x, int origin_y, int scale) {
    if (scale <= 0) throw Error("render_sign: scale must be > 0");
    const auto cps = utf8_codepoints(text);
    if (cps.empty()) throw Error("render_sign: empty text");
    std::string missing;
    for (char32_t cp : cps) {
        if (!glyph_for(cp) && missing.find(utf8_encode(std::span(&cp, 1))) == std::string::npos) {
            missing += (missing.empty() ? "" : " ") + utf8_encode(std::span(&cp, 1));
        }
    }
    if (!missing.empty()) throw Error("render_sign: unsupported glyph(s): " + missing);

    RenderedText out;
    const int advance = (kGlyphWidth + 1) * scale;
    out.bounds = {origin_x, origin_y, text_width(cps.size(), scale), kGlyphHeight * scale};
    out.ink = RasterMask(out.bounds.w, out.bounds.h);
    std::string token;
    int token_start = 0;
    int token_end = 0;
    auto flush = [&] {
        if (token.empty()) return;
        out.tokens.push_back({token, {origin_x + token_start, origin_y, token_end - token_start, kGlyphHeight * scale, 1.0}, 1.0});
        token.clear();
    };
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const int x = static_cast<int>(i) * advance;
        if (cps[i] == U' ') {
            flush();
            continue;
        }
        if (token.empty()) token_start = x;
        token += utf8_encode(std::span(&cps[i], 1));
        token_end = x + kGlyphWidth * scale;
        const Glyph g = *glyph_for(cps[i]);
        for (int r = 0; r < kGlyphHeight; ++r) {
            for (int c = 0; c < kGlyphWidth; ++c) {
                if ((g[r] >> (kGlyphWidth - 1 - c)) & 1u) out.ink.fill_rect({x + c * scale, r * scale, scale, scale});
            }
        }
    }
    flush();
    if (out.tokens.empty()) throw Error("render_sign: text has no visible characters");
    return out;
}

Canvas::Canvas(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

void Canvas::fill(PixelRect rect, std::array<std::uint8_t, 3> color) {
    const PixelRect r = clip(rect, width, height);
    for (int y = r.y; y < r.y + r.h; ++y) {
        for (int x = r.x; x < r.x + r.w; ++x) {
            const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
            rgb[i] = color[0];
            rgb[i + 1] = color[1];
            rgb[i + 2] = color[2];
        }
    }
}

void Canvas::paint(const RasterMask& mask, std::array<std::uint8_t, 3> color) {
    if (mask.width() != width || mask.height() != height) throw DimensionError("canvas/mask dimension mismatch");
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            if (mask.get(x, y)) fill({x, y, 1, 1}, color);
        }
    }
}

void Canvas::paint_ink(const RenderedText& text, std::array<std::uint8_t, 3> color) {
    for (int y = 0; y < text.bounds.h; ++y) {
        for (int x = 0; x < text.bounds.w; ++x) {
            if (text.ink.get(x, y)) fill({text.bounds.x + x, text.bounds.y + y, 1, 1}, color);
        }
    }
}

SynthScene generate_scene(const SynthSpec& spec, std::uint64_t index) { return SceneBuilder(spec, index).build(); }

std::filesystem::path synthesize(const SynthSpec& spec, const std::filesystem::path& out_dir, int parallelism) {
    spec.validate();
    try {
        std::filesystem::create_directories(out_dir / "scenes");
    } catch (const std::filesystem::filesystem_error& e) {
        throw Error("output directory not writable: " + out_dir.string() + " (" + e.what() + ")");
    }
    const int threads = std::max(1, parallelism > 0 ? parallelism : static_cast<int>(std::thread::hardware_concurrency()));
    std::vector<ManifestRecord> records(static_cast<std::size_t>(spec.count));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    {
        std::vector<std::jthread> workers;
        for (int t = 0; t < threads; ++t) {
            workers.emplace_back([&, t] {
                try {
                    for (int i = t; i < spec.count; i += threads) {
                        const auto scene = generate_scene(spec, static_cast<std::uint64_t>(i));
                        const std::string rel = "scenes/" + scene.id;
                        const auto dir = out_dir / rel;
                        std::filesystem::create_directories(dir);
                        write_file(dir / "raw.png", encode_png_rgb(scene.raw.width, scene.raw.height, scene.raw.rgb));
                        write_file(dir / "ar.png", encode_png_rgb(scene.ar.width, scene.ar.height, scene.ar.rgb));
                        write_file(dir / "content_mask.png", mask_to_png(scene.content_mask));
                        write_text_file(dir / "truth.json", truth_to_json(scene.truth).dump(1) + "\n");
                        records[static_cast<std::size_t>(i)] = {scene.id, rel + "/raw.png", rel + "/ar.png",
                                                                rel + "/content_mask.png", rel + "/truth.json"};
                    }
                } catch (...) {
                    errors[static_cast<std::size_t>(t)] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    const auto manifest = out_dir / "manifest.jsonl";
    std::string text;
    for (const auto& r : records) text += to_json(r).dump() + "\n";
    write_text_file(manifest, text);
    return manifest;
}

}  // namespace arsent
