#include "arsent/vim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <future>
#include <tuple>

#include "arsent/errors.hpp"

namespace arsent {

const std::string_view kImageOnlyInstruction =
    "No text differences were detected between the two views; assess the images directly for virtual symbols, "
    "arrows, or graphics that misrepresent the real-world scene.";

std::vector<char32_t> utf8_codepoints(std::string_view s) {
    std::vector<char32_t> out;
    for (std::size_t i = 0; i < s.size();) {
        const auto c = static_cast<unsigned char>(s[i]);
        int len = 0;
        char32_t cp = 0;
        if (c < 0x80) {
            len = 1;
            cp = c;
        } else if ((c >> 5) == 0x6) {
            len = 2;
            cp = c & 0x1f;
        } else if ((c >> 4) == 0xe) {
            len = 3;
            cp = c & 0x0f;
        } else if ((c >> 3) == 0x1e) {
            len = 4;
            cp = c & 0x07;
        }
        bool ok = len > 0 && i + len <= s.size();
        for (int k = 1; ok && k < len; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc >> 6) != 0x2) {
                ok = false;
            } else {
                cp = (cp << 6) | (cc & 0x3f);
            }
        }
        if (!ok) {
            out.push_back(U'�');
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string utf8_encode(std::span<const char32_t> cps) {
    std::string out;
    for (char32_t cp : cps) {
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
        } else {
            out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
        }
    }
    return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
    const auto x = utf8_codepoints(a);
    const auto y = utf8_codepoints(b);
    std::vector<std::size_t> prev(y.size() + 1), cur(y.size() + 1);
    for (std::size_t j = 0; j <= y.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= x.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= y.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[y.size()];
}

double scaled_pairing_radius(double base_radius, int width, int height) {
    return base_radius * std::hypot(width, height) / std::hypot(640.0, 480.0);
}

namespace {

auto token_key(const OcrToken& t) {
    return std::tie(t.box.y, t.box.x, t.box.w, t.box.h, t.text, t.confidence, t.box.score);
}

bool token_less(const OcrToken& a, const OcrToken& b) { return token_key(a) < token_key(b); }

/// Squared center distance in half-pixel units (exact).
std::int64_t center_dist2(const BoundingBox& a, const BoundingBox& b) {
    const std::int64_t dx = (2LL * a.x + a.w) - (2LL * b.x + b.w);
    const std::int64_t dy = (2LL * a.y + a.h) - (2LL * b.y + b.h);
    return dx * dx + dy * dy;
}

}  // namespace

TokenDiff diff_tokens(std::span<const OcrToken> raw, std::span<const OcrToken> ar, double pairing_radius) {
    struct Candidate {
        std::int64_t dist2;
        std::size_t raw_index;
        std::size_t ar_index;
    };
    const double limit = 4.0 * pairing_radius * pairing_radius;
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        for (std::size_t j = 0; j < ar.size(); ++j) {
            const auto d = center_dist2(raw[i].box, ar[j].box);
            if (static_cast<double>(d) <= limit) candidates.push_back({d, i, j});
        }
    }
    // Symmetric tie-break: order by the (smaller, larger) token of each pair.
    std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
        if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
        const auto& a1 = raw[a.raw_index];
        const auto& a2 = ar[a.ar_index];
        const auto& b1 = raw[b.raw_index];
        const auto& b2 = ar[b.ar_index];
        const OcrToken& alo = token_less(a2, a1) ? a2 : a1;
        const OcrToken& ahi = token_less(a2, a1) ? a1 : a2;
        const OcrToken& blo = token_less(b2, b1) ? b2 : b1;
        const OcrToken& bhi = token_less(b2, b1) ? b1 : b2;
        if (token_key(alo) != token_key(blo)) return token_less(alo, blo);
        if (token_key(ahi) != token_key(bhi)) return token_less(ahi, bhi);
        return std::tie(a.raw_index, a.ar_index) < std::tie(b.raw_index, b.ar_index);
    });

    std::vector<int> raw_match(raw.size(), -1), ar_match(ar.size(), -1);
    for (const auto& c : candidates) {
        if (raw_match[c.raw_index] >= 0 || ar_match[c.ar_index] >= 0) continue;
        raw_match[c.raw_index] = static_cast<int>(c.ar_index);
        ar_match[c.ar_index] = static_cast<int>(c.raw_index);
    }

    TokenDiff diff;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw_match[i] < 0) {
            diff.removals.push_back(raw[i]);
        } else if (raw[i].text != ar[raw_match[i]].text) {
            const auto& after = ar[raw_match[i]];
            diff.modifications.push_back({raw[i], after, levenshtein(raw[i].text, after.text)});
        }
    }
    for (std::size_t j = 0; j < ar.size(); ++j) {
        if (ar_match[j] < 0) diff.additions.push_back(ar[j]);
    }
    // Order pairs by their (smaller, larger) token so the order survives swapping the inputs.
    auto pair_key = [](const TokenModification& m) {
        const bool swap = token_less(m.after, m.before);
        return std::pair(token_key(swap ? m.after : m.before), token_key(swap ? m.before : m.after));
    };
    std::stable_sort(diff.modifications.begin(), diff.modifications.end(),
                     [&](const TokenModification& a, const TokenModification& b) { return pair_key(a) < pair_key(b); });
    return diff;
}

namespace {

std::string at(const BoundingBox& b) { return "(" + std::to_string(b.x) + ", " + std::to_string(b.y) + ")"; }

}  // namespace

std::string build_prompt(const TokenDiff& diff, const std::optional<std::string>& scene_context) {
    std::string p;
    p += "Prompt template ";
    p += kPromptTemplateId;
    p += ".\n";
    p += "You are reviewing an augmented reality scene for visual information manipulation.\n";
    p += "Image 1 is the real-world view. Image 2 is the same view with virtual content overlaid.\n";
    if (scene_context && !scene_context->empty()) p += "Scene context: " + *scene_context + "\n";
    if (diff.empty()) {
        p += kImageOnlyInstruction;
        p += "\n";
    } else {
        p += "OCR found " + std::to_string(diff.size()) + " text difference(s) between the two views:\n";
        int n = 0;
        for (const auto& m : diff.modifications) {
            p += std::to_string(++n) + ". changed \"" + m.before.text + "\" to \"" + m.after.text + "\" at " +
                 at(m.after.box) + " (edit distance " + std::to_string(m.edit_distance) + ")\n";
        }
        for (const auto& t : diff.additions) p += std::to_string(++n) + ". added \"" + t.text + "\" at " + at(t.box) + "\n";
        for (const auto& t : diff.removals) {
            p += std::to_string(++n) + ". removed \"" + t.text + "\" at " + at(t.box) + "\n";
        }
    }
    p += "Decide whether the virtual content changes the meaning of real-world information the user relies on.\n";
    p += "Reply with JSON: {\"manipulated\": true|false, \"confidence\": 0..1, \"rationale\": \"...\"}\n";
    return p;
}

namespace {

bool symbol_only(const std::string& text) {
    for (char32_t cp : utf8_codepoints(text)) {
        if (cp < 128 && std::isalnum(static_cast<int>(cp))) return false;
    }
    return true;
}

}  // namespace

VimTaxonomy classify_taxonomy(const TokenDiff& diff, const std::optional<VimTaxonomy>& truth_hint,
                              std::string_view default_purpose) {
    VimTaxonomy out;
    if (!diff.modifications.empty()) {
        const bool symbols = std::all_of(diff.modifications.begin(), diff.modifications.end(), [](const auto& m) {
            return symbol_only(m.before.text) && symbol_only(m.after.text);
        });
        out.format = symbols ? taxonomy::kSymbolReplacement : taxonomy::kTextAlteration;
    } else if (!diff.additions.empty()) {
        out.format = taxonomy::kTextAddition;
    } else if (!diff.removals.empty()) {
        out.format = taxonomy::kTextAlteration;
    } else {
        out.format = taxonomy::kMisleadingGraphic;
    }
    out.purpose = truth_hint ? truth_hint->purpose : std::string(default_purpose);
    return out;
}

namespace {

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) {
    try {
        return fn();
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(stage, e.what());
    }
}

}  // namespace

VimReport detect_vim(const ScenePair& pair, const PipelineConfig& config, const BackendSet& backends) {
    if (const auto violations = validate_scene_pair(pair, config.validation()); !violations.empty()) {
        throw Error("invalid scene pair '" + pair.id + "': " + violations.front());
    }
    LatencyRecorder recorder;
    VimReport report;
    report.scene_id = pair.id;

    auto raw_future =
        std::async(std::launch::async, [&] { return backends.ocr().ocr(pair.raw, &recorder); });
    std::vector<OcrToken> ar_tokens;
    std::optional<PipelineError> error;
    try {
        ar_tokens = backends.ocr().ocr(pair.ar, &recorder);
    } catch (const std::exception& e) {
        error.emplace("ocr", e.what());
    }
    std::vector<OcrToken> raw_tokens;
    try {
        raw_tokens = raw_future.get();
    } catch (const std::exception& e) {
        if (!error) error.emplace("ocr", e.what());
    }
    if (error) throw *error;

    {
        ScopedSpan span(&recorder, Stage::local_compute, Tier::edge);
        const double radius = scaled_pairing_radius(config.pairing_radius_px, pair.raw.width, pair.raw.height);
        report.diff = diff_tokens(raw_tokens, ar_tokens, radius);
        report.prompt = build_prompt(report.diff);
    }

    const auto answer = run_stage("verdict", [&] {
        return backends.verdict().semantic_verdict(report.prompt, {pair.raw, pair.ar}, &recorder);
    });
    if (answer.manipulated) {
        report.verdict = Verdict::attack(AttackKind::vim, answer.confidence, answer.rationale);
        report.taxonomy = classify_taxonomy(report.diff, std::nullopt, config.default_purpose);
    } else {
        report.verdict = Verdict::clear(answer.confidence, answer.rationale);
    }
    report.latency = recorder.snapshot();
    return report;
}

VimReport detect_vim(const ScenePair& pair, const PipelineConfig& config) {
    const BackendSet backends(config.endpoints);
    return detect_vim(pair, config, backends);
}

}  // namespace arsent
