#include "arsent/cli.hpp"

#include <algorithm>
#include <ostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "arsent/config.hpp"
#include "arsent/errors.hpp"
#include "arsent/eval.hpp"
#include "arsent/obstruction.hpp"
#include "arsent/oracle_backend.hpp"
#include "arsent/serialization.hpp"
#include "arsent/service.hpp"
#include "arsent/synth.hpp"
#include "arsent/vim.hpp"

namespace arsent {

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string format;
    std::optional<std::uint64_t> seed;
};

ServiceConfig resolve_config(const GlobalOptions& g) {
    ServiceConfig config =
        load_config(g.config_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(g.config_path));
    if (g.seed) {
        for (auto& ep : config.pipeline.endpoints) {
            if (ep.locator.rfind("oracle:", 0) == 0) ep.locator = with_oracle_seed(ep.locator, *g.seed);
        }
    }
    return config;
}

RasterMask load_content_mask(const std::filesystem::path& path) {
    if (path.extension() == ".rle") {
        const auto bytes = read_file(path);
        return mask_from_rle_text(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    }
    return mask_from_png(read_file(path));
}

std::string verdict_line(const Verdict& v) {
    std::string line = v.attacked ? "ATTACKED (" + std::string(to_string(v.kind)) + ")" : "clear";
    char conf[32];
    std::snprintf(conf, sizeof conf, "%.3f", v.confidence);
    line += "  confidence " + std::string(conf) + "  mitigation " + std::string(to_string(v.mitigation));
    return line + "\n  " + v.rationale + "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"arsent: detect obstruction and information manipulation attacks in AR scenes"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalOptions g;
    std::uint64_t seed_value = 0;
    app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"json", "text"}));
    auto* seed_opt = app.add_option("--seed", seed_value, "seed (synthesizer and oracle backends)");

    auto* synth = app.add_subcommand("synth", "generate a synthetic scene set");
    std::string out_dir;
    SynthSpec spec;
    std::string mix;
    std::string glyphs;
    int synth_parallelism = 0;
    synth->add_option("--out", out_dir, "output directory")->required();
    synth->add_option("--count", spec.count, "number of scenes")->check(CLI::NonNegativeNumber);
    synth->add_option("--mix", mix, "label mix, e.g. none:0.4,obstruction:0.3,vim:0.3");
    synth->add_option("--width", spec.width, "image width");
    synth->add_option("--height", spec.height, "image height");
    synth->add_option("--glyphs", glyphs, "restrict rendered text to these glyphs");
    synth->add_option("--min-cover", spec.obstruction_min_cover, "minimum covered fraction of an obstructed object");
    synth->add_option("--parallelism", synth_parallelism, "worker threads (0 = all cores)");

    auto* detect = app.add_subcommand("detect", "analyze one scene");
    detect->require_subcommand(1);
    std::string raw_path, ar_path, mask_path, scene_id = "cli";
    auto add_inputs = [&](CLI::App* sub) {
        sub->add_option("--raw", raw_path, "raw camera frame (PNG)")->required()->check(CLI::ExistingFile);
        sub->add_option("--ar", ar_path, "AR-augmented frame (PNG)")->required()->check(CLI::ExistingFile);
        sub->add_option("--content-mask", mask_path, "virtual content mask (PNG or .rle)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--id", scene_id, "scene id reported back");
        sub->fallthrough();
    };
    auto* detect_obs = detect->add_subcommand("obstruction", "obstruction attack detection");
    auto* detect_vim_cmd = detect->add_subcommand("vim", "visual information manipulation detection");
    add_inputs(detect_obs);
    add_inputs(detect_vim_cmd);
    detect->fallthrough();

    auto* eval = app.add_subcommand("eval", "evaluate a pipeline over a manifest");
    std::string manifest, pipeline_name = "obstruction";
    int eval_parallelism = -1;
    eval->add_option("--manifest", manifest, "manifest.jsonl")->required()->check(CLI::ExistingFile);
    eval->add_option("--pipeline", pipeline_name, "obstruction or vim")->check(CLI::IsMember({"obstruction", "vim"}));
    eval->add_option("--parallelism", eval_parallelism, "scenes evaluated concurrently (0 = all cores)");

    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP analysis service");
    std::string listen;
    serve_cmd->add_option("--listen", listen, "host:port");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitError;
    }
    if (seed_opt->count() > 0) g.seed = seed_value;

    try {
        if (synth->parsed()) {
            if (!mix.empty()) spec.mix = parse_mix(mix);
            if (!glyphs.empty()) spec.glyph_set = glyphs;
            if (g.seed) spec.seed = *g.seed;
            const auto path = synthesize(spec, out_dir, synth_parallelism);
            out << path.string() << "\n";
            return kExitOk;
        }
        if (detect->parsed()) {
            const ServiceConfig config = resolve_config(g);
            config.pipeline.validate();
            ScenePair pair;
            pair.id = scene_id;
            pair.raw = ImageRef::from_png_file(scene_id + "/raw", raw_path);
            pair.ar = ImageRef::from_png_file(scene_id + "/ar", ar_path);
            pair.content_mask = load_content_mask(mask_path);
            const bool text = g.format == "text";
            if (detect_obs->parsed()) {
                const auto report = detect_obstruction(pair, config.pipeline);
                if (text) {
                    out << verdict_line(report.verdict);
                    for (const auto& o : report.per_object) {
                        if (o.result.measure) {
                            char ratio[32];
                            std::snprintf(ratio, sizeof ratio, "%.4f", o.result.measure->ratio);
                            out << "  " << o.name << ": ratio " << ratio << (o.result.measure->flagged ? " (flagged)" : "")
                                << "\n";
                        }
                    }
                } else {
                    out << to_json(report).dump(2) << "\n";
                }
                return report.verdict.attacked ? kExitDetected : kExitOk;
            }
            const auto report = detect_vim(pair, config.pipeline);
            if (text) {
                out << verdict_line(report.verdict);
                if (report.taxonomy) out << "  format " << report.taxonomy->format << ", purpose " << report.taxonomy->purpose << "\n";
                out << report.prompt << "\n";
            } else {
                out << to_json(report).dump(2) << "\n";
            }
            return report.verdict.attacked ? kExitDetected : kExitOk;
        }
        if (eval->parsed()) {
            const ServiceConfig config = resolve_config(g);
            const int parallelism = eval_parallelism >= 0 ? eval_parallelism : config.eval_parallelism;
            const auto report = evaluate(manifest, parse_pipeline_kind(pipeline_name), config.pipeline, parallelism);
            out << emit_report(report, g.format == "json" ? ReportFormat::json : ReportFormat::text);
            return kExitOk;
        }
        if (serve_cmd->parsed()) {
            ServiceConfig config = resolve_config(g);
            if (!listen.empty()) {
                const auto colon = listen.rfind(':');
                if (colon == std::string::npos) throw ConfigError("--listen must be host:port");
                config.host = listen.substr(0, colon);
                try {
                    config.port = std::stoi(listen.substr(colon + 1));
                } catch (const std::exception&) {
                    throw ConfigError("--listen port is not a number");
                }
            }
            return serve(config);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

}  // namespace arsent
