#include "arsent/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "arsent/codec.hpp"
#include "arsent/errors.hpp"

namespace arsent {

using nlohmann::json;

std::array<BackendEndpoint, 5> PipelineConfig::default_endpoints(const std::string& locator) {
    std::array<BackendEndpoint, 5> out;
    for (BackendKind k : kAllBackendKinds) out[static_cast<int>(k)] = BackendEndpoint::with_defaults(k, locator);
    return out;
}

void PipelineConfig::set_locator(const std::string& locator) {
    for (auto& ep : endpoints) ep.locator = locator;
}

const BackendEndpoint& PipelineConfig::endpoint(BackendKind kind) const { return endpoints[static_cast<int>(kind)]; }
BackendEndpoint& PipelineConfig::endpoint(BackendKind kind) { return endpoints[static_cast<int>(kind)]; }

TaxonomyRegistry PipelineConfig::taxonomy() const {
    return TaxonomyRegistry::defaults().extended(extra_formats, extra_purposes);
}

ValidationOptions PipelineConfig::validation() const { return {slack_px, taxonomy()}; }

void PipelineConfig::validate() const {
    validate_threshold(threshold);
    if (max_key_objects < 1) throw ConfigError("max_key_objects must be >= 1");
    if (!(min_detection_score >= 0.0 && min_detection_score <= 1.0)) {
        throw ConfigError("min_detection_score must be in [0,1]");
    }
    if (!(pairing_radius_px > 0.0)) throw ConfigError("pairing_radius_px must be > 0");
    if (slack_px < 0) throw ConfigError("slack_px must be >= 0");
    if (!taxonomy().has_purpose(default_purpose)) {
        throw ConfigError("default_purpose '" + default_purpose + "' is not a taxonomy purpose");
    }
    for (BackendKind k : kAllBackendKinds) {
        const auto& ep = endpoint(k);
        if (ep.kind != k) throw ConfigError("endpoint table out of order");
        if (ep.locator.empty()) throw ConfigError("no backend locator for " + std::string(to_string(k)));
        if (ep.timeout_ms <= 0) throw ConfigError("timeout_ms must be > 0 for " + std::string(to_string(k)));
        if (ep.retries < 0) throw ConfigError("retries must be >= 0 for " + std::string(to_string(k)));
    }
}

void ServiceConfig::validate() const {
    pipeline.validate();
    if (port < 0 || port > 65535) throw ConfigError("listen port out of range");
    if (max_concurrent < 1) throw ConfigError("max_concurrent must be >= 1");
    if (eval_parallelism < 0) throw ConfigError("eval parallelism must be >= 0");
    int largest = 0;
    for (const auto& ep : pipeline.endpoints) largest = std::max(largest, ep.timeout_ms);
    if (request_timeout_ms < largest) {
        throw ConfigError("request_timeout_ms (" + std::to_string(request_timeout_ms) +
                          ") must be >= the largest backend timeout (" + std::to_string(largest) + ")");
    }
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items()) {
        if (!ok.count(key)) throw ConfigError("unknown config key '" + where + key + "'");
    }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + where + key + "' has the wrong type");
    }
}

std::pair<std::string, int> split_listen(const std::string& listen) {
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw ConfigError("listen must be host:port, got '" + listen + "'");
    try {
        return {listen.substr(0, colon), std::stoi(listen.substr(colon + 1))};
    } catch (const std::exception&) {
        throw ConfigError("listen must be host:port, got '" + listen + "'");
    }
}

int parse_int(const std::string& name, const std::string& v) {
    try {
        std::size_t used = 0;
        const int n = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw ConfigError(name + " is not an integer: '" + v + "'");
    }
}

double parse_double(const std::string& name, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(name + " is not a number: '" + v + "'");
    }
}

}  // namespace

ServiceConfig service_config_from_json(const json& j) {
    reject_unknown(j,
                   {"threshold", "max_key_objects", "min_detection_score", "pairing_radius_px", "default_purpose",
                    "slack_px", "backend", "endpoints", "taxonomy", "service", "eval"},
                   "");
    ServiceConfig c;
    auto& p = c.pipeline;
    read(j, "threshold", p.threshold, "");
    read(j, "max_key_objects", p.max_key_objects, "");
    read(j, "min_detection_score", p.min_detection_score, "");
    read(j, "pairing_radius_px", p.pairing_radius_px, "");
    read(j, "default_purpose", p.default_purpose, "");
    read(j, "slack_px", p.slack_px, "");
    if (j.contains("backend")) {
        std::string locator;
        read(j, "backend", locator, "");
        p.set_locator(locator);
    }
    if (j.contains("endpoints")) {
        const auto& eps = j.at("endpoints");
        reject_unknown(eps, {"keyobjects", "detect", "segment", "ocr", "verdict"}, "endpoints.");
        for (const auto& [name, e] : eps.items()) {
            const std::string where = "endpoints." + name + ".";
            reject_unknown(e, {"locator", "timeout_ms", "tier", "retries", "bearer_token"}, where);
            auto& ep = p.endpoint(parse_backend_kind(name));
            read(e, "locator", ep.locator, where);
            read(e, "timeout_ms", ep.timeout_ms, where);
            read(e, "retries", ep.retries, where);
            read(e, "bearer_token", ep.bearer_token, where);
            if (e.contains("tier")) {
                std::string tier;
                read(e, "tier", tier, where);
                try {
                    ep.tier = parse_tier(tier);
                } catch (const Error& err) {
                    throw ConfigError(err.what());
                }
            }
        }
    }
    if (j.contains("taxonomy")) {
        const auto& t = j.at("taxonomy");
        reject_unknown(t, {"formats", "purposes"}, "taxonomy.");
        read(t, "formats", p.extra_formats, "taxonomy.");
        read(t, "purposes", p.extra_purposes, "taxonomy.");
    }
    if (j.contains("service")) {
        const auto& s = j.at("service");
        reject_unknown(s, {"listen", "fail_policy", "max_concurrent", "request_timeout_ms"}, "service.");
        if (s.contains("listen")) {
            std::string listen;
            read(s, "listen", listen, "service.");
            std::tie(c.host, c.port) = split_listen(listen);
        }
        if (s.contains("fail_policy")) {
            std::string policy;
            read(s, "fail_policy", policy, "service.");
            try {
                c.fail_policy = parse_fail_policy(policy);
            } catch (const Error& err) {
                throw ConfigError(err.what());
            }
        }
        read(s, "max_concurrent", c.max_concurrent, "service.");
        read(s, "request_timeout_ms", c.request_timeout_ms, "service.");
    }
    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        reject_unknown(e, {"parallelism"}, "eval.");
        read(e, "parallelism", c.eval_parallelism, "eval.");
    }
    return c;
}

json to_json(const PipelineConfig& p, bool redact_secrets) {
    json eps = json::object();
    for (const auto& ep : p.endpoints) {
        json e = {{"locator", ep.locator},
                  {"timeout_ms", ep.timeout_ms},
                  {"tier", to_string(ep.tier)},
                  {"retries", ep.retries}};
        if (!ep.bearer_token.empty()) e["bearer_token"] = redact_secrets ? "***" : ep.bearer_token;
        eps[std::string(to_string(ep.kind))] = e;
    }
    return {{"threshold", p.threshold},
            {"max_key_objects", p.max_key_objects},
            {"min_detection_score", p.min_detection_score},
            {"pairing_radius_px", p.pairing_radius_px},
            {"default_purpose", p.default_purpose},
            {"slack_px", p.slack_px},
            {"endpoints", eps},
            {"taxonomy", {{"formats", p.extra_formats}, {"purposes", p.extra_purposes}}}};
}

json to_json(const ServiceConfig& c, bool redact_secrets) {
    json j = to_json(c.pipeline, redact_secrets);
    j["service"] = {{"listen", c.host + ":" + std::to_string(c.port)},
                    {"fail_policy", to_string(c.fail_policy)},
                    {"max_concurrent", c.max_concurrent},
                    {"request_timeout_ms", c.request_timeout_ms}};
    j["eval"] = {{"parallelism", c.eval_parallelism}};
    return j;
}

EnvLookup system_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        if (!v) return std::nullopt;
        return std::string(v);
    };
}

void apply_env_overrides(ServiceConfig& c, const EnvLookup& env) {
    auto get = [&](const char* suffix) { return env(std::string("ARSENT_") + suffix); };
    auto& p = c.pipeline;
    if (auto v = get("THRESHOLD")) p.threshold = parse_double("ARSENT_THRESHOLD", *v);
    if (auto v = get("MAX_KEY_OBJECTS")) p.max_key_objects = parse_int("ARSENT_MAX_KEY_OBJECTS", *v);
    if (auto v = get("MIN_DETECTION_SCORE")) p.min_detection_score = parse_double("ARSENT_MIN_DETECTION_SCORE", *v);
    if (auto v = get("PAIRING_RADIUS_PX")) p.pairing_radius_px = parse_double("ARSENT_PAIRING_RADIUS_PX", *v);
    if (auto v = get("DEFAULT_PURPOSE")) p.default_purpose = *v;
    if (auto v = get("SLACK_PX")) p.slack_px = parse_int("ARSENT_SLACK_PX", *v);
    if (auto v = get("BACKEND")) p.set_locator(*v);
    if (auto v = get("BEARER_TOKEN")) {
        for (auto& ep : p.endpoints) ep.bearer_token = *v;
    }
    if (auto v = get("TIMEOUT_MS")) {
        const int t = parse_int("ARSENT_TIMEOUT_MS", *v);
        for (auto& ep : p.endpoints) ep.timeout_ms = t;
    }
    if (auto v = get("LISTEN")) std::tie(c.host, c.port) = split_listen(*v);
    if (auto v = get("FAIL_POLICY")) {
        try {
            c.fail_policy = parse_fail_policy(*v);
        } catch (const Error& err) {
            throw ConfigError(err.what());
        }
    }
    if (auto v = get("MAX_CONCURRENT")) c.max_concurrent = parse_int("ARSENT_MAX_CONCURRENT", *v);
    if (auto v = get("REQUEST_TIMEOUT_MS")) c.request_timeout_ms = parse_int("ARSENT_REQUEST_TIMEOUT_MS", *v);
    if (auto v = get("EVAL_PARALLELISM")) c.eval_parallelism = parse_int("ARSENT_EVAL_PARALLELISM", *v);
}

ServiceConfig load_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env) {
    ServiceConfig c;
    if (path) {
        std::ifstream in(*path);
        if (!in) throw ConfigError("cannot open config " + path->string());
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError(path->string() + ": " + e.what());
        }
        c = service_config_from_json(j);
    }
    apply_env_overrides(c, env);
    return c;
}

std::string config_fingerprint(const PipelineConfig& config) {
    json j = to_json(config, true);
    for (auto& [_, ep] : j["endpoints"].items()) ep.erase("bearer_token");
    return sha256_hex(std::string_view(j.dump()));
}

}  // namespace arsent
