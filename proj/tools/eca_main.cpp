#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "eca/commands.hpp"

namespace {

struct GlobalFlags {
    std::string backend_kind;
    std::string cassette;
    std::string out_dir;
    std::string templates_dir;
    int max_concurrent = -1;
    int min_interval_ms = -1;
    bool verbose = false;
};

// Flags win over config-file fields.
void apply_overrides(eca::RunConfig& config, const GlobalFlags& flags) {
    if (!flags.backend_kind.empty()) config.backend.kind = flags.backend_kind;
    if (!flags.cassette.empty()) config.backend.cassette = flags.cassette;
    if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
    if (!flags.templates_dir.empty()) config.templates_dir = flags.templates_dir;
    if (flags.max_concurrent > 0) config.backend.max_concurrent = flags.max_concurrent;
    if (flags.min_interval_ms >= 0) config.backend.min_interval_ms = flags.min_interval_ms;
    if (flags.verbose) config.verbose = true;
}

eca::RunConfig config_from(const std::string& path, const GlobalFlags& flags) {
    eca::RunConfig config;
    if (!path.empty()) config = eca::RunConfig::load(path);
    apply_overrides(config, flags);
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-step emotion-cause analysis pipeline for conversations"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    GlobalFlags flags;
    app.add_option("--backend", flags.backend_kind, "Backend kind: http, replay, or record");
    app.add_option("--cassette", flags.cassette, "Cassette file for replay/record backends");
    app.add_option("--out-dir", flags.out_dir, "Output directory");
    app.add_option("--templates-dir", flags.templates_dir, "Prompt template directory");
    app.add_option("--max-concurrent", flags.max_concurrent, "Max in-flight backend requests");
    app.add_option("--min-interval-ms", flags.min_interval_ms,
                   "Minimum interval between request dispatches");
    app.add_flag("--verbose", flags.verbose, "Verbose diagnostics on stderr");

    // stats
    std::string statsCorpus;
    auto* stats = app.add_subcommand("stats", "Dataset statistics and histograms");
    stats->add_option("corpus", statsCorpus, "Corpus JSON file")->required();

    // build-index
    std::string buildConfigPath;
    std::string buildKind = "conversation";
    bool noExplanations = false;
    auto* build = app.add_subcommand("build-index", "Build retrieval indices from a train corpus");
    build->add_option("--config", buildConfigPath, "Run config JSON")->required();
    build->add_option("--kind", buildKind, "conversation | cause");
    build->add_flag("--no-explanations", noExplanations,
                    "Skip generating demonstration explanations");

    // caption
    std::string captionConfigPath;
    bool dumpGrids = false;
    auto* caption = app.add_subcommand("caption", "Caption conversation videos into a cache file");
    caption->add_option("--config", captionConfigPath, "Run config JSON")->required();
    caption->add_flag("--dump-grids", dumpGrids, "Write each 3x3 grid image as PNG");

    // run
    std::string runConfigPath;
    auto* run = app.add_subcommand("run", "Run the two-step prediction pipeline");
    run->add_option("--config", runConfigPath, "Run config JSON")->required();
    std::string runApproach;
    run->add_option("--approach", runApproach, "finetuned | icl (overrides config)");
    bool runGoldEmotions = false;
    run->add_flag("--use-gold-emotions", runGoldEmotions, "Feed gold labels to the cause step");
    int runSelfCauses = -1;
    run->add_option("--self-causes", runSelfCauses, "1 to add self-causes, 0 to disable");

    // evaluate
    std::string evalGold, evalPred, evalFormat = "json";
    auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold pairs");
    evaluate->add_option("--gold", evalGold, "Gold corpus JSON")->required();
    evaluate->add_option("--pred", evalPred, "Prediction document JSON")->required();
    evaluate->add_option("--format", evalFormat, "json | csv | markdown");

    // analyze-errors
    std::string errGold, errPred, errFormat = "markdown";
    auto* analyze = app.add_subcommand("analyze-errors",
                                       "Emotion-recognition confusion matrix and per-class metrics");
    analyze->add_option("--gold", errGold, "Gold corpus JSON")->required();
    analyze->add_option("--pred", errPred, "Prediction document JSON")->required();
    analyze->add_option("--format", errFormat, "json | csv | markdown");

    // render
    std::string renderConfigPath, renderConv, renderStep = "emotion";
    int renderTarget = 1;
    auto* render = app.add_subcommand("render", "Debug-print an assembled prompt");
    render->add_option("--config", renderConfigPath, "Run config JSON")->required();
    render->add_option("--conversation", renderConv, "Conversation id")->required();
    render->add_option("--target", renderTarget, "Target utterance id");
    render->add_option("--step", renderStep, "emotion | cause");

    // window
    std::string windowCorpus, windowConv;
    auto* window = app.add_subcommand("window", "Print context windows for a conversation");
    window->add_option("corpus", windowCorpus, "Corpus JSON file")->required();
    window->add_option("--conversation", windowConv, "Conversation id (all when omitted)");

    // validate
    std::string validateCorpus, validatePred;
    auto* validate = app.add_subcommand("validate", "Check a prediction document against a corpus");
    validate->add_option("--corpus", validateCorpus, "Corpus JSON file")->required();
    validate->add_option("--pred", validatePred, "Prediction document JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*stats) {
            const std::string outDir = flags.out_dir.empty() ? "out" : flags.out_dir;
            return eca::cmd_stats(statsCorpus, outDir, std::cout, std::cerr);
        }
        if (*build) {
            return eca::cmd_build_index(config_from(buildConfigPath, flags), buildKind,
                                        !noExplanations, std::cout, std::cerr);
        }
        if (*caption) {
            return eca::cmd_caption(config_from(captionConfigPath, flags), dumpGrids, std::cout,
                                    std::cerr);
        }
        if (*run) {
            eca::RunConfig config = config_from(runConfigPath, flags);
            if (!runApproach.empty()) {
                const auto approach = eca::parse_approach(runApproach);
                if (!approach) {
                    std::cerr << "run: unknown approach '" << runApproach << "'\n";
                    return 1;
                }
                config.approach = *approach;
            }
            if (runGoldEmotions) config.use_gold_emotions = true;
            if (runSelfCauses == 0) config.add_self_causes = false;
            if (runSelfCauses == 1) config.add_self_causes = true;
            return eca::cmd_run(config, std::cout, std::cerr);
        }
        if (*evaluate) {
            const auto format = eca::parse_report_format(evalFormat);
            if (!format) {
                std::cerr << "evaluate: unknown format '" << evalFormat << "'\n";
                return 1;
            }
            const std::string outDir = flags.out_dir.empty() ? "out" : flags.out_dir;
            return eca::cmd_evaluate(evalGold, evalPred, *format, outDir, std::cout, std::cerr);
        }
        if (*analyze) {
            const auto format = eca::parse_report_format(errFormat);
            if (!format) {
                std::cerr << "analyze-errors: unknown format '" << errFormat << "'\n";
                return 1;
            }
            const std::string outDir = flags.out_dir.empty() ? "out" : flags.out_dir;
            return eca::cmd_analyze_errors(errGold, errPred, *format, outDir, std::cout,
                                           std::cerr);
        }
        if (*render) {
            return eca::cmd_render(config_from(renderConfigPath, flags), renderConv, renderTarget,
                                   renderStep, std::cout, std::cerr);
        }
        if (*window) {
            return eca::cmd_window(windowCorpus, windowConv, std::cout, std::cerr);
        }
        if (*validate) {
            return eca::cmd_validate(validateCorpus, validatePred, std::cout, std::cerr);
        }
    } catch (const eca::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
