#include "arsent/oracle_backend.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "arsent/errors.hpp"
#include "arsent/manifest.hpp"
#include "arsent/rng.hpp"
#include "arsent/vim.hpp"

namespace arsent {

namespace {

constexpr std::string_view kScheme = "oracle:";
// Substitutions for simulated OCR character errors.
constexpr std::string_view kConfusionAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

double parse_prob(const std::string& key, const std::string& value) {
    double v = 0.0;
    try {
        std::size_t used = 0;
        v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
        throw ConfigError("oracle locator: " + key + " is not a number: '" + value + "'");
    }
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("oracle locator: " + key + " must be in [0,1]");
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError("oracle locator: " + key + " is not a non-negative integer: '" + value + "'");
    }
    return v;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string fmt_prob(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    const int x0 = std::max(a.x, b.x), y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.x + a.w, b.x + b.w), y1 = std::min(a.y + a.h, b.y + b.h);
    if (x1 <= x0 || y1 <= y0) return 0.0;
    const double inter = static_cast<double>(x1 - x0) * (y1 - y0);
    return inter / (static_cast<double>(a.w) * a.h + static_cast<double>(b.w) * b.h - inter);
}

std::string_view view_name(SceneView v) { return v == SceneView::raw ? "raw" : "ar"; }

}  // namespace

OracleLocator OracleLocator::parse(std::string_view locator) {
    if (locator.substr(0, kScheme.size()) != kScheme) throw ConfigError("not an oracle locator: " + std::string(locator));
    std::string_view rest = locator.substr(kScheme.size());
    const auto q = rest.find('?');
    OracleLocator out;
    out.sidecar_dir = std::string(rest.substr(0, q));
    if (out.sidecar_dir.empty()) throw ConfigError("oracle locator needs a sidecar directory");
    if (q == std::string_view::npos) return out;

    std::string query(rest.substr(q + 1));
    std::stringstream ss(query);
    std::string item;
    while (std::getline(ss, item, '&')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("oracle locator: parameter without value: '" + item + "'");
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        if (key == "seed") {
            out.noise.seed = parse_u64(key, value);
        } else if (key == "drop_object_prob") {
            out.noise.drop_object_prob = parse_prob(key, value);
        } else if (key == "box_jitter_px") {
            out.noise.box_jitter_px = static_cast<int>(parse_u64(key, value));
        } else if (key == "char_error_rate") {
            out.noise.char_error_rate = parse_prob(key, value);
        } else if (key == "verdict_flip_prob") {
            out.noise.verdict_flip_prob = parse_prob(key, value);
        } else if (key == "delay_ms") {
            out.noise.delay_ms = static_cast<int>(parse_u64(key, value));
        } else {
            throw ConfigError("oracle locator: unknown parameter '" + key + "'");
        }
    }
    return out;
}

std::string OracleLocator::to_string() const {
    std::string s = std::string(kScheme) + sidecar_dir.string() + "?seed=" + std::to_string(noise.seed);
    if (noise.drop_object_prob > 0) s += "&drop_object_prob=" + fmt_prob(noise.drop_object_prob);
    if (noise.box_jitter_px > 0) s += "&box_jitter_px=" + std::to_string(noise.box_jitter_px);
    if (noise.char_error_rate > 0) s += "&char_error_rate=" + fmt_prob(noise.char_error_rate);
    if (noise.verdict_flip_prob > 0) s += "&verdict_flip_prob=" + fmt_prob(noise.verdict_flip_prob);
    if (noise.delay_ms > 0) s += "&delay_ms=" + std::to_string(noise.delay_ms);
    return s;
}

std::string with_oracle_seed(const std::string& locator, std::uint64_t seed) {
    if (locator.rfind(std::string(kScheme), 0) != 0) return locator;
    auto parsed = OracleLocator::parse(locator);
    parsed.noise.seed = seed;
    return parsed.to_string();
}

GroundTruth load_truth_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return truth_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

OracleBackend::OracleBackend(OracleLocator locator) : locator_(std::move(locator)) {
    if (!std::filesystem::is_directory(locator_.sidecar_dir)) {
        throw ConfigError("oracle sidecar directory not found: " + locator_.sidecar_dir.string());
    }
}

void OracleBackend::ensure_index() const {
    std::call_once(index_once_, [this] {
        const auto scenes_dir = locator_.sidecar_dir / "scenes";
        std::vector<std::filesystem::path> dirs;
        if (std::filesystem::is_directory(scenes_dir)) {
            for (const auto& entry : std::filesystem::directory_iterator(scenes_dir)) {
                if (std::filesystem::exists(entry.path() / "truth.json")) dirs.push_back(entry.path());
            }
        }
        std::sort(dirs.begin(), dirs.end());
        for (const auto& dir : dirs) {
            Scene scene{dir.filename().string(), load_truth_file(dir / "truth.json")};
            const std::size_t idx = scenes_.size();
            by_id_[scene.id] = idx;
            if (!scene.truth.raw_digest.empty()) by_digest_[scene.truth.raw_digest] = {idx, SceneView::raw};
            if (!scene.truth.ar_digest.empty()) by_digest_[scene.truth.ar_digest] = {idx, SceneView::ar};
            scenes_.push_back(std::move(scene));
        }
    });
}

std::pair<const OracleBackend::Scene*, SceneView> OracleBackend::resolve(const ImageRef& image) const {
    ensure_index();
    const auto slash = image.id.rfind('/');
    if (slash != std::string::npos) {
        const std::string view = image.id.substr(slash + 1);
        const auto it = by_id_.find(image.id.substr(0, slash));
        if (it != by_id_.end() && (view == "raw" || view == "ar")) {
            return {&scenes_[it->second], view == "raw" ? SceneView::raw : SceneView::ar};
        }
    }
    const auto it = by_digest_.find(image.digest());
    if (it == by_digest_.end()) {
        throw ProtocolError("oracle: image '" + image.id + "' matches no scene under " + locator_.sidecar_dir.string());
    }
    return {&scenes_[it->second.first], it->second.second};
}

void OracleBackend::simulate_delay(const BackendEndpoint& ep) const {
    const int delay = locator_.noise.delay_ms;
    if (delay <= 0) return;
    if (delay > ep.timeout_ms) {
        std::this_thread::sleep_for(std::chrono::milliseconds(ep.timeout_ms));
        throw TimeoutError("oracle: simulated delay exceeds timeout", ep.timeout_ms);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(delay));
}

void OracleBackend::log(NoiseEvent event) {
    std::lock_guard lock(log_mutex_);
    log_.push_back(std::move(event));
}

std::vector<NoiseEvent> OracleBackend::noise_log() const {
    std::lock_guard lock(log_mutex_);
    return log_;
}

std::size_t OracleBackend::count_events(std::string_view operation) const {
    std::lock_guard lock(log_mutex_);
    return static_cast<std::size_t>(
        std::count_if(log_.begin(), log_.end(), [&](const NoiseEvent& e) { return e.operation == operation; }));
}

void OracleBackend::clear_noise_log() {
    std::lock_guard lock(log_mutex_);
    log_.clear();
}

std::vector<std::string> OracleBackend::identify_key_objects(const ImageRef& image, const BackendEndpoint& ep) {
    simulate_delay(ep);
    const auto [scene, view] = resolve(image);
    std::vector<std::string> out;
    for (const auto& k : scene->truth.key_objects) {
        if (std::find(out.begin(), out.end(), k.name) != out.end()) continue;
        Rng rng(SeedBuilder(noise().seed).add(scene->id).add("keyobjects").add(k.name).value());
        if (rng.bernoulli(noise().drop_object_prob)) {
            log({scene->id, "drop_object", k.name});
            continue;
        }
        out.push_back(k.name);
    }
    return out;
}

std::vector<BoundingBox> OracleBackend::detect(const ImageRef& image, const std::string& query,
                                               const BackendEndpoint& ep) {
    simulate_delay(ep);
    const auto [scene, view] = resolve(image);
    const int jitter = noise().box_jitter_px;
    std::vector<BoundingBox> out;
    std::uint64_t index = 0;
    for (const auto& k : scene->truth.key_objects) {
        if (lower(k.name) != lower(query)) continue;
        BoundingBox b = k.box;
        b.score = 1.0;
        if (jitter > 0) {
            Rng rng(SeedBuilder(noise().seed).add(scene->id).add("detect").add(query).add(index).value());
            const int dl = static_cast<int>(rng.between(-jitter, jitter));
            const int dt = static_cast<int>(rng.between(-jitter, jitter));
            const int dr = static_cast<int>(rng.between(-jitter, jitter));
            const int db = static_cast<int>(rng.between(-jitter, jitter));
            const int left = std::clamp(b.x + dl, 0, image.width - 1);
            const int top = std::clamp(b.y + dt, 0, image.height - 1);
            const int right = std::clamp(b.x + b.w + dr, left + 1, image.width);
            const int bottom = std::clamp(b.y + b.h + db, top + 1, image.height);
            b = {left, top, right - left, bottom - top, 1.0};
            log({scene->id, "box_jitter",
                 query + ": " + std::to_string(dl) + "," + std::to_string(dt) + "," + std::to_string(dr) + "," +
                     std::to_string(db)});
        }
        out.push_back(b);
        ++index;
    }
    return out;
}

std::vector<RasterMask> OracleBackend::segment(const ImageRef& image, const std::vector<BoundingBox>& boxes,
                                               const BackendEndpoint& ep) {
    simulate_delay(ep);
    const auto [scene, view] = resolve(image);
    std::vector<RasterMask> out;
    for (const auto& box : boxes) {
        const KeyObject* best = nullptr;
        double best_iou = 0.0;
        for (const auto& k : scene->truth.key_objects) {
            const double v = iou(box, k.box);
            if (v > best_iou) {
                best_iou = v;
                best = &k;
            }
        }
        if (!best) {
            out.emplace_back(image.width, image.height);
        } else if (box.rect() == best->box.rect()) {
            out.push_back(best->mask);
        } else {
            out.push_back(best->mask & RasterMask::from_rect(image.width, image.height, box.rect()));
        }
    }
    return out;
}

std::vector<OcrToken> OracleBackend::ocr(const ImageRef& image, const BackendEndpoint& ep) {
    simulate_delay(ep);
    const auto [scene, view] = resolve(image);
    std::vector<OcrToken> tokens = view == SceneView::raw ? scene->truth.raw_tokens : scene->truth.ar_tokens;
    const double cer = noise().char_error_rate;
    if (cer <= 0.0) return tokens;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        Rng rng(SeedBuilder(noise().seed).add(scene->id).add("ocr").add(view_name(view)).add(i).value());
        auto cps = utf8_codepoints(tokens[i].text);
        bool changed = false;
        for (auto& cp : cps) {
            if (!rng.bernoulli(cer)) continue;
            // Draw from the alphabet minus the original character.
            const auto pos = kConfusionAlphabet.find(static_cast<char>(cp < 128 ? cp : 0));
            const bool in_alpha = cp < 128 && pos != std::string_view::npos;
            std::uint64_t pick = rng.below(kConfusionAlphabet.size() - (in_alpha ? 1 : 0));
            if (in_alpha && pick >= pos) ++pick;
            cp = static_cast<char32_t>(kConfusionAlphabet[pick]);
            changed = true;
        }
        if (changed) {
            const std::string before = tokens[i].text;
            tokens[i].text = utf8_encode(cps);
            log({scene->id, "char_error", std::string(view_name(view)) + ": " + before + " -> " + tokens[i].text});
        }
    }
    return tokens;
}

SemanticVerdict OracleBackend::semantic_verdict(const std::string& /*prompt*/, const std::vector<ImageRef>& images,
                                                const BackendEndpoint& ep) {
    simulate_delay(ep);
    const auto [scene, view] = resolve(images.front());
    const bool truth = scene->truth.label == SceneLabel::vim;
    bool manipulated = truth;
    std::string rationale = "oracle: ground-truth label " + std::string(to_string(scene->truth.label));
    if (noise().verdict_flip_prob > 0.0) {
        Rng rng(SeedBuilder(noise().seed).add(scene->id).add("verdict").value());
        if (rng.bernoulli(noise().verdict_flip_prob)) {
            manipulated = !manipulated;
            rationale += " (flipped by noise)";
            log({scene->id, "verdict_flip", truth ? "true -> false" : "false -> true"});
        }
    }
    return {manipulated, 1.0, rationale};
}

}  // namespace arsent
