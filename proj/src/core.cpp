#include "arsent/core.hpp"

#include <algorithm>

#include "arsent/errors.hpp"

namespace arsent {

bool BoundingBox::fits(int image_width, int image_height) const {
    return w > 0 && h > 0 && x >= 0 && y >= 0 && x + w <= image_width && y + h <= image_height && score >= 0.0 &&
           score <= 1.0;
}

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::string_view (&names)[N], const char* what) {
    for (std::size_t i = 0; i < N; ++i) {
        if (names[i] == s) return static_cast<Enum>(i);
    }
    throw Error(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

constexpr std::string_view kLabelNames[] = {"none", "obstruction", "vim"};
constexpr std::string_view kMitigationNames[] = {"none", "make_translucent"};
constexpr std::string_view kFailPolicyNames[] = {"fail_open", "fail_closed"};

}  // namespace

std::string_view to_string(SceneLabel v) { return kLabelNames[static_cast<int>(v)]; }
std::string_view to_string(AttackKind v) { return kLabelNames[static_cast<int>(v)]; }
std::string_view to_string(Mitigation v) { return kMitigationNames[static_cast<int>(v)]; }
std::string_view to_string(FailPolicy v) { return kFailPolicyNames[static_cast<int>(v)]; }
SceneLabel parse_scene_label(std::string_view s) { return parse_enum<SceneLabel>(s, kLabelNames, "label"); }
AttackKind parse_attack_kind(std::string_view s) { return parse_enum<AttackKind>(s, kLabelNames, "attack kind"); }
Mitigation parse_mitigation(std::string_view s) { return parse_enum<Mitigation>(s, kMitigationNames, "mitigation"); }
FailPolicy parse_fail_policy(std::string_view s) { return parse_enum<FailPolicy>(s, kFailPolicyNames, "fail policy"); }

TaxonomyRegistry TaxonomyRegistry::defaults() {
    using namespace taxonomy;
    return {{std::string(kTextAlteration), std::string(kTextAddition), std::string(kSymbolReplacement),
             std::string(kMisleadingGraphic)},
            {std::string(kMisdirection), std::string(kMisinformation), std::string(kDistraction)}};
}

TaxonomyRegistry TaxonomyRegistry::extended(const std::vector<std::string>& extra_formats,
                                            const std::vector<std::string>& extra_purposes) const {
    TaxonomyRegistry out = *this;
    for (const auto& f : extra_formats) {
        if (!out.has_format(f)) out.formats.push_back(f);
    }
    for (const auto& p : extra_purposes) {
        if (!out.has_purpose(p)) out.purposes.push_back(p);
    }
    return out;
}

bool TaxonomyRegistry::has_format(std::string_view f) const {
    return std::find(formats.begin(), formats.end(), f) != formats.end();
}

bool TaxonomyRegistry::has_purpose(std::string_view p) const {
    return std::find(purposes.begin(), purposes.end(), p) != purposes.end();
}

Verdict Verdict::clear(double confidence, std::string rationale) {
    return {false, AttackKind::none, confidence, Mitigation::none, std::move(rationale)};
}

Verdict Verdict::attack(AttackKind kind, double confidence, std::string rationale) {
    return {true, kind, confidence, Mitigation::make_translucent, std::move(rationale)};
}

namespace {

void check_image(const ImageRef& img, const std::string& field, std::vector<std::string>& out) {
    const bool dims_ok = img.width > 0 && img.height > 0 && img.width <= kMaxImageSide && img.height <= kMaxImageSide;
    if (!dims_ok) out.push_back(field + ".dimensions: width and height must be in 1..8192");
    if (static_cast<bool>(img.pixels) == img.path.has_value()) {
        out.push_back(field + ".source: exactly one of pixels or path must be present");
    } else if (img.pixels && dims_ok &&
               img.pixels->size() != static_cast<std::size_t>(img.width) * img.height * 3) {
        out.push_back(field + ".pixels: buffer length != width*height*3");
    }
}

bool text_ok(const std::string& text) {
    return !text.empty() && text.find('\n') == std::string::npos && text.find('\r') == std::string::npos;
}

void check_tokens(const std::vector<OcrToken>& tokens, const std::string& field, int w, int h,
                  std::vector<std::string>& out) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& t = tokens[i];
        const std::string f = field + "[" + std::to_string(i) + "]";
        if (!text_ok(t.text)) out.push_back(f + ".text: must be non-empty without line breaks");
        if (!t.box.fits(w, h)) out.push_back(f + ".box: outside image or degenerate");
        if (t.confidence < 0.0 || t.confidence > 1.0) out.push_back(f + ".confidence: must be in [0,1]");
    }
}

}  // namespace

std::vector<std::string> validate_scene_pair(const ScenePair& pair, const ValidationOptions& options) {
    std::vector<std::string> out;
    if (pair.id.empty()) out.push_back("id: must be non-empty");
    check_image(pair.raw, "raw", out);
    check_image(pair.ar, "ar", out);
    const int w = pair.raw.width;
    const int h = pair.raw.height;
    if (pair.raw.width != pair.ar.width || pair.raw.height != pair.ar.height) {
        out.push_back("raw/ar dimension mismatch");
    }
    if (pair.content_mask.width() != w || pair.content_mask.height() != h) {
        out.push_back("content_mask: dimensions differ from images");
    }
    if (!pair.truth) return out;

    const GroundTruth& t = *pair.truth;
    for (std::size_t i = 0; i < t.key_objects.size(); ++i) {
        const auto& k = t.key_objects[i];
        const std::string f = "truth.key_objects[" + std::to_string(i) + "]";
        if (k.name.empty()) out.push_back(f + ".name: must be non-empty");
        if (!k.box.fits(w, h)) out.push_back(f + ".box: outside image or degenerate");
        if (k.mask.width() != w || k.mask.height() != h) {
            out.push_back(f + ".mask: dimensions differ from images");
            continue;
        }
        const PixelRect slack{k.box.x - options.slack_px, k.box.y - options.slack_px, k.box.w + 2 * options.slack_px,
                              k.box.h + 2 * options.slack_px};
        const PixelRect b = k.mask.bounds();
        if (!b.empty() &&
            (b.x < slack.x || b.y < slack.y || b.x + b.w > slack.x + slack.w || b.y + b.h > slack.y + slack.h)) {
            out.push_back(f + ".mask: set pixels outside box + slack");
        }
    }
    if (t.label == SceneLabel::obstruction && t.key_objects.empty()) {
        out.push_back("obstruction label requires key objects");
    }
    if (t.label == SceneLabel::vim && (!t.vim_format || !t.vim_purpose)) {
        out.push_back("vim label requires vim_format and vim_purpose");
    }
    if (t.vim_format && !options.taxonomy.has_format(*t.vim_format)) {
        out.push_back("truth.vim_format: unknown taxonomy member '" + *t.vim_format + "'");
    }
    if (t.vim_purpose && !options.taxonomy.has_purpose(*t.vim_purpose)) {
        out.push_back("truth.vim_purpose: unknown taxonomy member '" + *t.vim_purpose + "'");
    }
    check_tokens(t.raw_tokens, "truth.raw_tokens", w, h, out);
    check_tokens(t.ar_tokens, "truth.ar_tokens", w, h, out);
    return out;
}

std::vector<std::string> validate_verdict(const Verdict& v) {
    std::vector<std::string> out;
    if (!v.attacked && v.kind != AttackKind::none) out.push_back("verdict.kind: must be none when not attacked");
    if (!v.attacked && v.mitigation != Mitigation::none) {
        out.push_back("verdict.mitigation: must be none when not attacked");
    }
    if (v.confidence < 0.0 || v.confidence > 1.0) out.push_back("verdict.confidence: must be in [0,1]");
    return out;
}

}  // namespace arsent
