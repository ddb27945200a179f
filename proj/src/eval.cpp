#include "arsent/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "arsent/errors.hpp"
#include "arsent/manifest.hpp"
#include "arsent/obstruction.hpp"
#include "arsent/vim.hpp"

namespace arsent {

using json = nlohmann::json;

std::string_view to_string(PipelineKind k) { return k == PipelineKind::obstruction ? "obstruction" : "vim"; }

PipelineKind parse_pipeline_kind(std::string_view s) {
    if (s == "obstruction") return PipelineKind::obstruction;
    if (s == "vim") return PipelineKind::vim;
    throw ConfigError("unknown pipeline '" + std::string(s) + "' (expected obstruction or vim)");
}

ReportFormat parse_report_format(std::string_view s) {
    if (s == "json") return ReportFormat::json;
    if (s == "text") return ReportFormat::text;
    throw ConfigError("unknown report format '" + std::string(s) + "' (expected json or text)");
}

void Confusion::add(bool predicted, bool actual) {
    if (predicted && actual) ++tp;
    else if (predicted) ++fp;
    else if (actual) ++fn;
    else ++tn;
}

void Confusion::merge(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
}

std::optional<double> Confusion::accuracy() const {
    if (total() == 0) return std::nullopt;
    return static_cast<double>(tp + tn) / static_cast<double>(total());
}

std::optional<double> Confusion::precision() const {
    if (tp + fp == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

std::optional<double> Confusion::recall() const {
    if (tp + fn == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

std::int64_t nearest_rank_percentile(std::vector<std::int64_t> samples, double percentile) {
    if (samples.empty()) return 0;
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, samples.size());
    return samples[rank - 1];
}

LatencyStats LatencyStats::of(std::vector<std::int64_t> samples) {
    LatencyStats s;
    s.count = samples.size();
    if (samples.empty()) return s;
    long double sum = 0;
    for (auto v : samples) sum += v;
    s.mean_ns = static_cast<double>(sum / static_cast<long double>(samples.size()));
    s.p95_ns = nearest_rank_percentile(std::move(samples), 95.0);
    return s;
}

bool EvalReport::same_outcome(const EvalReport& o) const {
    auto counts = [](const std::map<std::string, LatencyStats>& m) {
        std::map<std::string, std::uint64_t> c;
        for (const auto& [k, v] : m) c[k] = v.count;
        return c;
    };
    return pipeline == o.pipeline && n == o.n && confusion == o.confusion && accuracy == o.accuracy &&
           precision == o.precision && recall == o.recall && failed == o.failed && failures == o.failures &&
           per_label == o.per_label && object_level == o.object_level &&
           counts(per_stage_latency) == counts(o.per_stage_latency) &&
           end_to_end_latency.count == o.end_to_end_latency.count && config_fingerprint == o.config_fingerprint;
}

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
    const auto& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
}

json confusion_json(const Confusion& c) {
    return {{"tp", c.tp},
            {"fp", c.fp},
            {"tn", c.tn},
            {"fn", c.fn},
            {"accuracy", optional_number(c.accuracy())},
            {"precision", optional_number(c.precision())},
            {"recall", optional_number(c.recall())}};
}

Confusion confusion_from_json(const json& j) {
    Confusion c;
    c.tp = j.at("tp").get<std::uint64_t>();
    c.fp = j.at("fp").get<std::uint64_t>();
    c.tn = j.at("tn").get<std::uint64_t>();
    c.fn = j.at("fn").get<std::uint64_t>();
    return c;
}

json stats_json(const LatencyStats& s) { return {{"count", s.count}, {"mean_ns", s.mean_ns}, {"p95_ns", s.p95_ns}}; }

LatencyStats stats_from_json(const json& j) {
    LatencyStats s;
    s.count = j.at("count").get<std::uint64_t>();
    s.mean_ns = j.at("mean_ns").get<double>();
    s.p95_ns = j.at("p95_ns").get<std::int64_t>();
    return s;
}

/// Object-level outcome: each truth key object is positive iff it is a recorded target,
/// predicted positive iff the pipeline flagged an object of that name.
Confusion object_confusion(const GroundTruth& truth, const ObstructionReport& report) {
    std::set<std::string> flagged;
    for (const auto& f : report.per_object) {
        if (f.result.measure && f.result.measure->flagged) flagged.insert(f.name);
    }
    const std::set<std::string> targets(truth.targets.begin(), truth.targets.end());
    Confusion c;
    for (const auto& obj : truth.key_objects) c.add(flagged.count(obj.name) > 0, targets.count(obj.name) > 0);
    return c;
}

ScenePrediction run_scene(const ScenePair& pair, PipelineKind pipeline, const PipelineConfig& config,
                          const BackendSet& backends) {
    ScenePrediction p;
    p.scene_id = pair.id;
    p.truth = pair.truth->label;
    try {
        if (pipeline == PipelineKind::obstruction) {
            const auto report = detect_obstruction(pair, config, backends);
            p.predicted_positive = report.verdict.attacked && report.verdict.kind == AttackKind::obstruction;
            p.latency = report.latency;
            p.object_level = object_confusion(*pair.truth, report);
        } else {
            const auto report = detect_vim(pair, config, backends);
            p.predicted_positive = report.verdict.attacked && report.verdict.kind == AttackKind::vim;
            p.latency = report.latency;
        }
    } catch (const PipelineError& e) {
        p.failure = FailedScene{pair.id, e.stage(), e.cause()};
    } catch (const std::exception& e) {
        p.failure = FailedScene{pair.id, "input", e.what()};
    }
    return p;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

std::string fmt_optional_percent(const std::optional<double>& v) { return v ? format_percent(*v) : "n/a"; }

std::string fmt_ms(double ns) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", ns / 1e6);
    return buf;
}

}  // namespace

EvalReport compute_report(std::span<const ScenePrediction> predictions, PipelineKind pipeline,
                          std::string config_fingerprint) {
    EvalReport r;
    r.pipeline = std::string(to_string(pipeline));
    r.config_fingerprint = std::move(config_fingerprint);
    r.generated_at = utc_now();
    const SceneLabel positive = pipeline == PipelineKind::obstruction ? SceneLabel::obstruction : SceneLabel::vim;

    std::map<Stage, std::vector<std::int64_t>> stage_samples;
    std::vector<std::int64_t> walls;
    Confusion objects;
    bool any_objects = false;
    for (const auto& p : predictions) {
        if (p.failure) {
            r.failures.push_back(*p.failure);
            continue;
        }
        const bool actual = p.truth == positive;
        r.confusion.add(p.predicted_positive, actual);
        auto& label = r.per_label[std::string(to_string(p.truth))];
        ++label.n;
        if (p.predicted_positive) ++label.predicted_positive;
        if (p.predicted_positive == actual) ++label.correct;
        if (p.object_level) {
            objects.merge(*p.object_level);
            any_objects = true;
        }
        for (const auto& span : p.latency.spans) stage_samples[span.stage].push_back(span.elapsed_ns);
        walls.push_back(p.latency.wall_ns);
    }
    std::sort(r.failures.begin(), r.failures.end(),
              [](const FailedScene& a, const FailedScene& b) { return a.scene_id < b.scene_id; });
    r.failed = r.failures.size();
    r.n = r.confusion.total();
    r.accuracy = r.confusion.accuracy();
    r.precision = r.confusion.precision();
    r.recall = r.confusion.recall();
    if (pipeline == PipelineKind::obstruction && any_objects) r.object_level = objects;
    for (auto& [stage, samples] : stage_samples) {
        r.per_stage_latency[std::string(to_string(stage))] = LatencyStats::of(std::move(samples));
    }
    r.end_to_end_latency = LatencyStats::of(std::move(walls));
    return r;
}

EvalReport evaluate(const std::filesystem::path& manifest, PipelineKind pipeline, const PipelineConfig& config,
                    const BackendSet& backends, int parallelism) {
    config.validate();
    const auto pairs = load_manifest(manifest, config.validation());
    for (const auto& pair : pairs) {
        if (!pair.truth) throw Error("scene '" + pair.id + "' has no ground truth; evaluation needs it");
    }
    std::vector<ScenePrediction> predictions(pairs.size());
    const auto workers_wanted =
        std::max(1, parallelism > 0 ? parallelism : static_cast<int>(std::thread::hardware_concurrency()));
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(workers_wanted), std::max<std::size_t>(1, pairs.size()));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < pairs.size(); i = next++) {
            predictions[i] = run_scene(pairs[i], pipeline, config, backends);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> threads;
        for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(work);
    }
    return compute_report(predictions, pipeline, config_fingerprint(config));
}

EvalReport evaluate(const std::filesystem::path& manifest, PipelineKind pipeline, const PipelineConfig& config,
                    int parallelism) {
    const BackendSet backends(config.endpoints);
    return evaluate(manifest, pipeline, config, backends, parallelism);
}

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", fraction * 100.0);
    return buf;
}

std::string emit_report(const EvalReport& r, ReportFormat format) {
    if (format == ReportFormat::json) {
        json failures = json::array();
        for (const auto& f : r.failures) failures.push_back({{"scene_id", f.scene_id}, {"stage", f.stage}, {"error", f.error}});
        json labels = json::object();
        for (const auto& [k, v] : r.per_label) {
            labels[k] = {{"n", v.n}, {"predicted_positive", v.predicted_positive}, {"correct", v.correct}};
        }
        json stages = json::object();
        for (const auto& [k, v] : r.per_stage_latency) stages[k] = stats_json(v);
        json j = {{"pipeline", r.pipeline},
                  {"n", r.n},
                  {"tp", r.confusion.tp},
                  {"fp", r.confusion.fp},
                  {"tn", r.confusion.tn},
                  {"fn", r.confusion.fn},
                  {"accuracy", optional_number(r.accuracy)},
                  {"precision", optional_number(r.precision)},
                  {"recall", optional_number(r.recall)},
                  {"failed", r.failed},
                  {"failures", failures},
                  {"per_label", labels},
                  {"object_level", r.object_level ? confusion_json(*r.object_level) : json(nullptr)},
                  {"per_stage_latency", stages},
                  {"end_to_end_latency", stats_json(r.end_to_end_latency)},
                  {"config_fingerprint", r.config_fingerprint},
                  {"generated_at", r.generated_at}};
        return j.dump(2) + "\n";
    }

    std::string out;
    auto row = [&](const std::string& label, const std::string& value) { out += pad(label, 22) + value + "\n"; };
    auto counts = [](const Confusion& c) {
        return "tp " + std::to_string(c.tp) + "  fp " + std::to_string(c.fp) + "  tn " + std::to_string(c.tn) +
               "  fn " + std::to_string(c.fn);
    };
    row("pipeline", r.pipeline);
    row("scenes", std::to_string(r.n) + " evaluated, " + std::to_string(r.failed) + " failed");
    row("confusion", counts(r.confusion));
    row("accuracy", fmt_optional_percent(r.accuracy));
    row("precision", fmt_optional_percent(r.precision));
    row("recall", fmt_optional_percent(r.recall));
    if (r.object_level) {
        row("object level", counts(*r.object_level));
        row("  accuracy", fmt_optional_percent(r.object_level->accuracy()));
        row("  precision", fmt_optional_percent(r.object_level->precision()));
        row("  recall", fmt_optional_percent(r.object_level->recall()));
    }
    if (!r.per_label.empty()) {
        out += "\n" + pad("label", 22) + pad("n", 10) + pad("positive", 10) + "correct\n";
        for (const auto& [k, v] : r.per_label) {
            out += pad("  " + k, 22) + pad(std::to_string(v.n), 10) + pad(std::to_string(v.predicted_positive), 10) +
                   std::to_string(v.correct) + "\n";
        }
    }
    out += "\n" + pad("latency", 22) + pad("calls", 10) + pad("mean ms", 12) + "p95 ms\n";
    for (const auto& [k, v] : r.per_stage_latency) {
        out += pad("  " + k, 22) + pad(std::to_string(v.count), 10) + pad(fmt_ms(v.mean_ns), 12) +
               fmt_ms(static_cast<double>(v.p95_ns)) + "\n";
    }
    const auto& e = r.end_to_end_latency;
    out += pad("  end to end", 22) + pad(std::to_string(e.count), 10) + pad(fmt_ms(e.mean_ns), 12) +
           fmt_ms(static_cast<double>(e.p95_ns)) + "\n";
    if (!r.failures.empty()) {
        out += "\nfailed scenes\n";
        for (const auto& f : r.failures) out += "  " + f.scene_id + "  " + f.stage + "  " + f.error + "\n";
    }
    out += "\n";
    row("config fingerprint", r.config_fingerprint);
    row("generated at", r.generated_at);
    return out;
}

EvalReport report_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        EvalReport r;
        r.pipeline = j.at("pipeline").get<std::string>();
        r.n = j.at("n").get<std::uint64_t>();
        r.confusion = confusion_from_json(j);
        r.accuracy = read_optional(j, "accuracy");
        r.precision = read_optional(j, "precision");
        r.recall = read_optional(j, "recall");
        r.failed = j.at("failed").get<std::uint64_t>();
        for (const auto& f : j.at("failures")) {
            r.failures.push_back({f.at("scene_id").get<std::string>(), f.at("stage").get<std::string>(),
                                  f.at("error").get<std::string>()});
        }
        for (const auto& [k, v] : j.at("per_label").items()) {
            r.per_label[k] = {v.at("n").get<std::uint64_t>(), v.at("predicted_positive").get<std::uint64_t>(),
                              v.at("correct").get<std::uint64_t>()};
        }
        if (!j.at("object_level").is_null()) r.object_level = confusion_from_json(j.at("object_level"));
        for (const auto& [k, v] : j.at("per_stage_latency").items()) r.per_stage_latency[k] = stats_from_json(v);
        r.end_to_end_latency = stats_from_json(j.at("end_to_end_latency"));
        r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
        r.generated_at = j.at("generated_at").get<std::string>();
        return r;
    } catch (const json::exception& e) {
        throw Error(std::string("invalid report JSON: ") + e.what());
    }
}

}  // namespace arsent
