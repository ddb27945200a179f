#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arsent/image.hpp"
#include "arsent/mask.hpp"

namespace arsent {

/// Detector box in pixel coordinates of the image it annotates.
struct BoundingBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
    double score = 1.0;

    PixelRect rect() const { return {x, y, w, h}; }
    bool fits(int image_width, int image_height) const;
    bool operator==(const BoundingBox&) const = default;
};

struct OcrToken {
    std::string text;
    BoundingBox box;
    double confidence = 1.0;

    bool operator==(const OcrToken&) const = default;
};

struct KeyObject {
    std::string name;
    BoundingBox box;
    RasterMask mask;

    bool operator==(const KeyObject&) const = default;
};

enum class SceneLabel { none, obstruction, vim };
enum class AttackKind { none, obstruction, vim };
enum class Mitigation { none, make_translucent };
/// What a caller wants when a pipeline stage fails.
enum class FailPolicy { fail_open, fail_closed };

std::string_view to_string(SceneLabel v);
std::string_view to_string(AttackKind v);
std::string_view to_string(Mitigation v);
std::string_view to_string(FailPolicy v);
SceneLabel parse_scene_label(std::string_view s);
AttackKind parse_attack_kind(std::string_view s);
Mitigation parse_mitigation(std::string_view s);
FailPolicy parse_fail_policy(std::string_view s);

namespace taxonomy {
inline constexpr std::string_view kTextAlteration = "text_alteration";
inline constexpr std::string_view kTextAddition = "text_addition";
inline constexpr std::string_view kSymbolReplacement = "symbol_replacement";
inline constexpr std::string_view kMisleadingGraphic = "misleading_graphic";

inline constexpr std::string_view kMisdirection = "misdirection";
inline constexpr std::string_view kMisinformation = "misinformation";
inline constexpr std::string_view kDistraction = "distraction";
}  // namespace taxonomy

/// Two-axis VIM classification. Members are strings so deployments can extend
/// either axis through configuration.
struct VimTaxonomy {
    std::string format;
    std::string purpose;

    bool operator==(const VimTaxonomy&) const = default;
};

/// Known members of each taxonomy axis.
struct TaxonomyRegistry {
    std::vector<std::string> formats;
    std::vector<std::string> purposes;

    /// Built-in members only.
    static TaxonomyRegistry defaults();
    /// Built-ins plus extras (duplicates ignored).
    TaxonomyRegistry extended(const std::vector<std::string>& extra_formats,
                              const std::vector<std::string>& extra_purposes) const;
    bool has_format(std::string_view f) const;
    bool has_purpose(std::string_view p) const;
};

struct GroundTruth {
    SceneLabel label = SceneLabel::none;
    std::vector<KeyObject> key_objects;
    std::optional<std::string> vim_format;
    std::optional<std::string> vim_purpose;
    std::optional<std::string> text_before;
    std::optional<std::string> text_after;

    // Sidecar extensions used by oracle backends and object-level scoring.
    std::vector<std::string> targets;  // names of obstructed key objects
    std::vector<OcrToken> raw_tokens;
    std::vector<OcrToken> ar_tokens;
    std::string raw_digest;
    std::string ar_digest;

    bool operator==(const GroundTruth&) const = default;
};

struct ScenePair {
    std::string id;
    ImageRef raw;
    ImageRef ar;
    RasterMask content_mask;
    std::optional<GroundTruth> truth;
};

struct Verdict {
    bool attacked = false;
    AttackKind kind = AttackKind::none;
    double confidence = 1.0;
    Mitigation mitigation = Mitigation::none;
    std::string rationale;

    static Verdict clear(double confidence, std::string rationale);
    static Verdict attack(AttackKind kind, double confidence, std::string rationale);
    bool operator==(const Verdict&) const = default;
};

struct ValidationOptions {
    int slack_px = 8;
    TaxonomyRegistry taxonomy = TaxonomyRegistry::defaults();
};

/// Every broken invariant of the pair and its sidecar, one description each.
/// Never throws.
std::vector<std::string> validate_scene_pair(const ScenePair& pair, const ValidationOptions& options = {});

/// Violations of the Verdict invariant (attacked=false => kind none, mitigation none).
std::vector<std::string> validate_verdict(const Verdict& verdict);

}  // namespace arsent
