#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "arsent/backend.hpp"

namespace arsent {

/// Parsed `oracle:<dir>?seed=<n>&drop_object_prob=..&box_jitter_px=..&char_error_rate=..&verdict_flip_prob=..&delay_ms=..`.
struct OracleLocator {
    std::filesystem::path sidecar_dir;
    NoiseProfile noise;

    static OracleLocator parse(std::string_view locator);
    std::string to_string() const;
};

/// Rewrites the seed of an oracle locator; other locators are returned unchanged.
std::string with_oracle_seed(const std::string& locator, std::uint64_t seed);

/// One perturbation the oracle applied.
struct NoiseEvent {
    std::string scene_id;
    std::string operation;  // "drop_object", "box_jitter", "char_error", "verdict_flip"
    std::string detail;

    bool operator==(const NoiseEvent&) const = default;
};

enum class SceneView { raw, ar };

/// Ground-truth-driven backend over a synthesizer output directory.
///
/// Scenes resolve from ImageRef ids of the form "<scene>/raw" or "<scene>/ar",
/// falling back to the pixel digest recorded in each sidecar. Every random
/// choice is drawn from a stream keyed by (seed, scene, operation, query), so
/// responses do not depend on call order or concurrency.
class OracleBackend final : public ModelBackend {
public:
    explicit OracleBackend(OracleLocator locator);

    std::vector<std::string> identify_key_objects(const ImageRef& image, const BackendEndpoint& ep) override;
    std::vector<BoundingBox> detect(const ImageRef& image, const std::string& query,
                                    const BackendEndpoint& ep) override;
    std::vector<RasterMask> segment(const ImageRef& image, const std::vector<BoundingBox>& boxes,
                                    const BackendEndpoint& ep) override;
    std::vector<OcrToken> ocr(const ImageRef& image, const BackendEndpoint& ep) override;
    SemanticVerdict semantic_verdict(const std::string& prompt, const std::vector<ImageRef>& images,
                                     const BackendEndpoint& ep) override;

    const NoiseProfile& noise() const { return locator_.noise; }
    std::vector<NoiseEvent> noise_log() const;
    std::size_t count_events(std::string_view operation) const;
    void clear_noise_log();

private:
    struct Scene {
        std::string id;
        GroundTruth truth;
    };

    void ensure_index() const;
    std::pair<const Scene*, SceneView> resolve(const ImageRef& image) const;
    void simulate_delay(const BackendEndpoint& ep) const;
    void log(NoiseEvent event);

    OracleLocator locator_;
    mutable std::once_flag index_once_;
    mutable std::vector<Scene> scenes_;
    mutable std::unordered_map<std::string, std::size_t> by_id_;
    mutable std::unordered_map<std::string, std::pair<std::size_t, SceneView>> by_digest_;

    mutable std::mutex log_mutex_;
    std::vector<NoiseEvent> log_;
};

/// Ground truth for one scene directory (scenes/<id>/truth.json), as the oracle reads it.
GroundTruth load_truth_file(const std::filesystem::path& path);

}  // namespace arsent
