#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "arsent/backend.hpp"
#include "arsent/config.hpp"
#include "arsent/core.hpp"
#include "arsent/latency.hpp"
#include "arsent/obstruction.hpp"

namespace arsent {

struct TokenModification {
    OcrToken before;
    OcrToken after;
    std::size_t edit_distance = 0;

    bool operator==(const TokenModification&) const = default;
};

struct TokenDiff {
    std::vector<OcrToken> additions;      // AR only
    std::vector<OcrToken> removals;       // raw only
    std::vector<TokenModification> modifications;

    bool empty() const { return additions.empty() && removals.empty() && modifications.empty(); }
    std::size_t size() const { return additions.size() + removals.size() + modifications.size(); }
};

/// Levenshtein distance over Unicode code points (UTF-8 input).
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Splits UTF-8 into code points; invalid bytes map to U+FFFD.
std::vector<char32_t> utf8_codepoints(std::string_view text);
std::string utf8_encode(std::span<const char32_t> codepoints);

/// Base radius scaled by image diagonal relative to 640x480.
double scaled_pairing_radius(double base_radius, int width, int height);

/// Greedy nearest-center matching within `pairing_radius`.
///
/// Candidate pairs are visited by ascending center distance; ties break on a
/// symmetric token order, so swapping the inputs swaps additions/removals and
/// before/after and changes nothing else.
TokenDiff diff_tokens(std::span<const OcrToken> raw_tokens, std::span<const OcrToken> ar_tokens,
                      double pairing_radius);

inline constexpr std::string_view kPromptTemplateId = "vim-diff-v1";
extern const std::string_view kImageOnlyInstruction;

/// Renders the difference prompt. Each difference is one numbered line.
std::string build_prompt(const TokenDiff& diff, const std::optional<std::string>& scene_context = std::nullopt);

/// Rule-based format, hinted or default purpose.
VimTaxonomy classify_taxonomy(const TokenDiff& diff, const std::optional<VimTaxonomy>& truth_hint,
                              std::string_view default_purpose = taxonomy::kMisinformation);

struct VimReport {
    std::string scene_id;
    TokenDiff diff;
    std::string prompt;
    std::string template_id = std::string(kPromptTemplateId);
    Verdict verdict;
    std::optional<VimTaxonomy> taxonomy;  // present when manipulated
    std::string status = std::string(kStatusDetermined);
    std::optional<StageFailure> failure;
    LatencyTrace latency;
};

/// OCR both views (concurrently) -> diff -> prompt -> joint verdict.
VimReport detect_vim(const ScenePair& pair, const PipelineConfig& config, const BackendSet& backends);
VimReport detect_vim(const ScenePair& pair, const PipelineConfig& config);

}  // namespace arsent
