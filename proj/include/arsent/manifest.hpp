#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "arsent/core.hpp"

namespace arsent {

/// One manifest line; paths relative to the manifest directory.
struct ManifestRecord {
    std::string id;
    std::string raw;
    std::string ar;
    std::string content_mask;
    std::string truth;

    bool operator==(const ManifestRecord&) const = default;
};

nlohmann::json to_json(const ManifestRecord& record);
ManifestRecord manifest_record_from_json(const nlohmann::json& j);

/// Loads and validates every record. Errors read "line N: <detail>".
std::vector<ScenePair> load_manifest(const std::filesystem::path& path, const ValidationOptions& options = {});

/// Writes the scene's files under `<root>/scenes/<id>/` and returns its record.
ManifestRecord write_scene(const ScenePair& pair, const std::filesystem::path& root);
/// Loads one record relative to `root` (no validation).
ScenePair read_scene(const ManifestRecord& record, const std::filesystem::path& root);

nlohmann::json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const nlohmann::json& j);

}  // namespace arsent
