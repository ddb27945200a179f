#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "arsent/backend.hpp"
#include "arsent/core.hpp"

namespace arsent {

struct PipelineConfig {
    double threshold = 0.3;
    int max_key_objects = 8;
    double min_detection_score = 0.25;
    double pairing_radius_px = 24.0;  // at 640x480; scaled with the image diagonal
    std::string default_purpose = std::string(taxonomy::kMisinformation);
    int slack_px = 8;
    std::vector<std::string> extra_formats;
    std::vector<std::string> extra_purposes;
    std::array<BackendEndpoint, 5> endpoints = default_endpoints("");

    static std::array<BackendEndpoint, 5> default_endpoints(const std::string& locator);
    /// Same locator for all five endpoints, keeping timeouts and tiers.
    void set_locator(const std::string& locator);
    const BackendEndpoint& endpoint(BackendKind kind) const;
    BackendEndpoint& endpoint(BackendKind kind);

    TaxonomyRegistry taxonomy() const;
    ValidationOptions validation() const;
    /// Throws ConfigError on the first invalid field.
    void validate() const;
};

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    PipelineConfig pipeline;
    FailPolicy fail_policy = FailPolicy::fail_closed;
    int max_concurrent = 16;
    int request_timeout_ms = 30000;
    int eval_parallelism = 0;  // 0 = hardware concurrency

    void validate() const;
};

/// Reads a JSON config. Unknown keys are rejected.
ServiceConfig service_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ServiceConfig& config, bool redact_secrets);
nlohmann::json to_json(const PipelineConfig& config, bool redact_secrets);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
/// process environment
EnvLookup system_env();

/// Overrides scalar fields from ARSENT_* variables:
/// THRESHOLD, MAX_KEY_OBJECTS, MIN_DETECTION_SCORE, PAIRING_RADIUS_PX, DEFAULT_PURPOSE,
/// SLACK_PX, BACKEND, BEARER_TOKEN, TIMEOUT_MS, LISTEN, FAIL_POLICY, MAX_CONCURRENT,
/// REQUEST_TIMEOUT_MS, EVAL_PARALLELISM.
void apply_env_overrides(ServiceConfig& config, const EnvLookup& env);

/// File (optional) + environment. Callers validate the parts they use.
ServiceConfig load_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env = system_env());

/// SHA-256 over the canonical JSON of the pipeline config (secrets excluded).
std::string config_fingerprint(const PipelineConfig& config);

}  // namespace arsent
