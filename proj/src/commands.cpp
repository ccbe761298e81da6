#include "eca/commands.hpp"

#include <iostream>
#include <sstream>

#include "eca/util.hpp"

namespace eca {

namespace {

TemplateSet load_templates(const RunConfig& config) {
    return TemplateSet::load(config.templates_dir.empty() ? TemplateSet::default_dir()
                                                          : config.templates_dir);
}

Embedder backend_embedder(const RunConfig& config, Backend& backend, const std::string& tag) {
    return [&backend, model = config.embedding_model, tag](const std::string& text) {
        ModelRequest request;
        request.kind = RequestKind::embedding;
        request.model_id = model;
        request.input_text = text;
        request.trace_tag = tag;
        return complete(request, backend).embedding;
    };
}

}  // namespace

BackendStack::BackendStack(const BackendSettings& settings) {
    if (settings.kind == "http") {
        http_ = std::make_unique<HttpBackend>(settings.base_url, settings.timeout_seconds);
        active_ = http_.get();
    } else if (settings.kind == "replay") {
        cassette_ =
            std::make_unique<CassetteBackend>(CassetteMode::replay, settings.cassette, nullptr);
        active_ = cassette_.get();
    } else if (settings.kind == "record") {
        http_ = std::make_unique<HttpBackend>(settings.base_url, settings.timeout_seconds);
        cassette_ = std::make_unique<CassetteBackend>(CassetteMode::record, settings.cassette,
                                                      http_.get());
        active_ = cassette_.get();
    } else {
        throw ConfigError("unknown backend kind '" + settings.kind + "'");
    }
    throttle_ = std::make_unique<Throttle>(settings.max_concurrent,
                                           std::chrono::milliseconds(settings.min_interval_ms));
    throttled_ = std::make_unique<ThrottledBackend>(*active_, *throttle_);
    active_ = throttled_.get();
}

int cmd_stats(const std::filesystem::path& corpus_path, const std::filesystem::path& out_dir,
              std::ostream& out, std::ostream& err) {
    try {
        const auto corpus = load_corpus(corpus_path);
        const DatasetStats stats = compute_stats(corpus);
        const auto doc = stats_to_json(stats);
        write_file(out_dir / "stats.json", doc.dump(2) + "\n");
        write_file(out_dir / "emotion_histogram.csv", emotion_histogram_csv(stats));
        write_file(out_dir / "relative_positions.csv", relative_position_csv(stats));
        out << doc.dump(2) << "\n";
        return 0;
    } catch (const Error& e) {
        err << "stats: " << e.what() << "\n";
        return 1;
    }
}

nlohmann::json run_index_build(const RunConfig& config, Backend& backend,
                               const TemplateSet& templates, const std::string& kind,
                               bool with_explanations) {
    if (config.train_corpus.empty()) throw ConfigError("build-index requires train_corpus");
    const auto corpus = load_corpus(config.train_corpus);
    const Embedder embedder = backend_embedder(config, backend, "embed-build");
    std::filesystem::create_directories(config.out_dir);

    PayloadStore payloads;
    const std::filesystem::path payloadPath =
        config.payloads.empty() ? config.out_dir / "payloads.json" : config.payloads;
    if (std::filesystem::exists(payloadPath)) {
        payloads = PayloadStore::load(payloadPath);
    }

    const auto explain = [&](const DemoPayload& payload) -> std::string {
        ModelRequest request;
        request.kind = RequestKind::chat;
        request.model_id = config.chat_model;
        request.max_output_tokens = config.max_output_tokens;
        std::map<std::string, std::string> values;
        if (payload.kind == "conversation") {
            values["conversation"] = payload.annotated_text;
            request.trace_tag = "explain-emotion:" + payload.conversation_id;
            request.messages = {
                {"user", templates.get(TemplateName::emotion_explanation).render(values)}};
        } else {
            values["window"] = payload.annotated_text;
            values["target_utterance"] = payload.target_line;
            values["emotion"] = payload.target_emotion;
            request.trace_tag = "explain-cause:" + payload.conversation_id + ":" +
                                std::to_string(payload.target_utt_id);
            request.messages = {
                {"user", templates.get(TemplateName::cause_explanation).render(values)}};
        }
        return complete(request, backend).content;
    };

    nlohmann::json report;
    if (kind == "conversation") {
        if (config.selection.empty()) {
            throw ConfigError("build-index --kind conversation requires a selection");
        }
        auto build = build_conversation_index(corpus, config.selection, embedder, &payloads);
        const auto path = config.conversation_index.empty()
                              ? config.out_dir / "conversation_index.json"
                              : config.conversation_index;
        if (with_explanations) {
            for (auto& record : build.index.records) {
                DemoPayload* payload = payloads.find(record.payload_ref);
                if (payload && payload->explanation.empty()) {
                    payload->explanation = explain(*payload);
                }
            }
        }
        save_index(build.index, path);
        payloads.save(payloadPath);
        report["records"] = build.index.records.size();
        nlohmann::json coverage;
        for (const auto& [label, count] : build.emotion_coverage) {
            coverage[std::string(to_string(label))] = count;
        }
        report["emotion_coverage"] = std::move(coverage);
        report["index"] = path.string();
        return report;
    }
    if (kind == "cause") {
        auto indices = build_cause_indices(corpus, embedder, &payloads);
        const auto path = config.cause_indices.empty() ? config.out_dir / "cause_indices.json"
                                                       : config.cause_indices;
        if (with_explanations) {
            for (auto& [key, index] : indices) {
                for (auto& record : index.records) {
                    DemoPayload* payload = payloads.find(record.payload_ref);
                    if (payload && payload->explanation.empty()) {
                        payload->explanation = explain(*payload);
                    }
                }
            }
        }
        save_cause_indices(indices, path);
        payloads.save(payloadPath);
        long total = 0;
        nlohmann::json perKey;
        for (const auto& [key, index] : indices) {
            perKey[key.to_string()] = index.records.size();
            total += static_cast<long>(index.records.size());
        }
        report["records"] = total;
        report["per_key"] = std::move(perKey);
        report["index"] = path.string();
        return report;
    }
    throw ConfigError("build-index kind must be 'conversation' or 'cause'");
}

int cmd_build_index(const RunConfig& config, const std::string& kind, bool with_explanations,
                    std::ostream& out, std::ostream& err) {
    try {
        const TemplateSet templates = load_templates(config);
        BackendStack stack(config.backend);
        const auto report =
            run_index_build(config, stack.active(), templates, kind, with_explanations);
        out << report.dump(2) << "\n";
        return 0;
    } catch (const Error& e) {
        err << "build-index: " << e.what() << "\n";
        return 1;
    }
}

int cmd_caption(const RunConfig& config, bool dump_grids, std::ostream& out, std::ostream& err) {
    try {
        const auto corpus = load_corpus(config.eval_corpus);
        const TemplateSet templates = load_templates(config);
        BackendStack stack(config.backend);
        CaptionOptions options;
        options.batch_size = config.caption_batch_size;
        options.vision_model = config.vision_model;
        options.chat_model = config.chat_model;
        options.max_output_tokens = config.max_output_tokens;
        options.media_root = config.media_root;
        if (dump_grids) {
            options.dump_grids_dir = config.out_dir / "grids";
            std::filesystem::create_directories(options.dump_grids_dir);
        }

        std::map<std::string, std::string> cache;
        const auto cachePath = config.captions_cache.empty() ? config.out_dir / "captions.json"
                                                             : config.captions_cache;
        if (std::filesystem::exists(cachePath)) cache = load_caption_cache(cachePath);
        for (const auto& conv : corpus) {
            if (cache.count(conv.id)) continue;
            const CaptionResult result =
                caption_conversation(conv, stack.active(), templates, options);
            for (UttId id : result.skipped) {
                err << "caption: conversation " << conv.id << " utterance " << id
                    << ": video unreadable, placeholder used\n";
            }
            cache[conv.id] = result.caption;
        }
        save_caption_cache(cache, cachePath);
        out << cachePath.string() << "\n";
        return 0;
    } catch (const Error& e) {
        err << "caption: " << e.what() << "\n";
        return 1;
    }
}

RunOutcome run_from_config(const RunConfig& config, std::ostream& err) {
    RunOutcome outcome;
    config.validate_for_run();

    const auto corpus = load_corpus(config.eval_corpus);
    const TemplateSet templates = load_templates(config);
    BackendStack stack(config.backend);

    PipelineConfig pipeline;
    pipeline.approach = config.approach;
    pipeline.use_video_captions = config.use_video_captions;
    pipeline.add_self_causes = config.add_self_causes;
    pipeline.use_gold_emotions = config.use_gold_emotions;
    pipeline.max_attempts = config.max_attempts;
    pipeline.token_budget = config.token_budget;
    pipeline.caption_batch_size = config.caption_batch_size;
    pipeline.max_output_tokens = config.max_output_tokens;
    pipeline.demonstrations = config.demonstrations;
    pipeline.chat_model = config.chat_model;
    pipeline.vision_model = config.vision_model;
    pipeline.embedding_model = config.embedding_model;
    pipeline.media_root = config.media_root;
    pipeline.jobs = config.jobs;
    if (config.approach == Approach::icl) {
        pipeline.conversation_index =
            std::make_shared<VectorIndex>(load_index(config.conversation_index));
        pipeline.cause_indices = std::make_shared<std::map<IndexKey, VectorIndex>>(
            load_cause_indices(config.cause_indices));
        pipeline.payloads = std::make_shared<PayloadStore>(PayloadStore::load(config.payloads));
    }
    if (!config.captions_cache.empty() && std::filesystem::exists(config.captions_cache)) {
        pipeline.caption_cache = load_caption_cache(config.captions_cache);
    }

    outcome.result = run_pipeline(corpus, pipeline, stack.active(), templates);
    if (!config.backend.cassette.empty() && std::filesystem::exists(config.backend.cassette)) {
        outcome.result.document.provenance.cassette_digest =
            cassette_file_digest(config.backend.cassette);
    }

    const auto findings = validate_predictions(corpus, outcome.result.document);
    for (const auto& finding : findings) {
        err << "run: validation finding in " << finding.conversation_id << ": "
            << finding.message << "\n";
    }

    std::filesystem::create_directories(config.out_dir);
    outcome.document_path = config.out_dir / "predictions.json";
    outcome.result.document.save(outcome.document_path);

    std::ostringstream log;
    log << "approach: " << to_string(config.approach) << "\n";
    log << "backend: " << stack.active().describe() << "\n";
    log << "conversations: " << outcome.result.document.conversations.size() << "\n";
    log << "failures: " << outcome.result.failures.size() << "\n";
    for (const auto& failure : outcome.result.failures) {
        log << "  " << failure.conversation_id << ":" << failure.utt_id << " [" << failure.stage
            << "] " << failure.message << "\n";
    }
    log << "warnings: " << outcome.result.warnings.size() << "\n";
    for (const auto& warning : outcome.result.warnings) log << "  " << warning << "\n";
    write_file(config.out_dir / "run.log", log.str());

    for (const auto& failure : outcome.result.failures) {
        err << "run: " << failure.conversation_id << ":" << failure.utt_id << " ["
            << failure.stage << "] " << failure.message << "\n";
    }
    if (config.verbose) {
        for (const auto& warning : outcome.result.warnings) err << "run: " << warning << "\n";
    }
    outcome.exit_code = outcome.result.failures.empty() ? 0 : 2;
    return outcome;
}

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        const RunOutcome outcome = run_from_config(config, err);
        out << outcome.document_path.string() << "\n";
        return outcome.exit_code;
    } catch (const Error& e) {
        err << "run: " << e.what() << "\n";
        return 1;
    }
}

int cmd_evaluate(const std::filesystem::path& gold_corpus,
                 const std::filesystem::path& predictions, ReportFormat format,
                 const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err) {
    try {
        const auto corpus = load_corpus(gold_corpus);
        const auto document = PredictionDocument::load(predictions);
        const ScoreResult scores = score_pairs(gold_pairs_of(corpus), pairs_of(document));

        const char* extension = format == ReportFormat::json      ? "json"
                                : format == ReportFormat::csv     ? "csv"
                                                                  : "md";
        std::filesystem::create_directories(out_dir);
        emit_report(&scores, nullptr, nullptr, format,
                    out_dir / (std::string("evaluation.") + extension));

        out << render_report(&scores, nullptr, nullptr, format);
        out << "F1: " << format_fixed(scores.micro.f1(), 4) << "\n";
        out << "w-avg F1: " << format_fixed(scores.breakdown.weighted_f1, 4) << "\n";
        return 0;
    } catch (const Error& e) {
        err << "evaluate: " << e.what() << "\n";
        return 1;
    }
}

int cmd_analyze_errors(const std::filesystem::path& gold_corpus,
                       const std::filesystem::path& predictions, ReportFormat format,
                       const std::filesystem::path& out_dir, std::ostream& out,
                       std::ostream& err) {
    try {
        const auto corpus = load_corpus(gold_corpus);
        const auto document = PredictionDocument::load(predictions);
        const ConfusionMatrix matrix = confusion(gold_emotions_of(corpus), emotions_of(document));

        const char* extension = format == ReportFormat::json      ? "json"
                                : format == ReportFormat::csv     ? "csv"
                                                                  : "md";
        std::filesystem::create_directories(out_dir);
        emit_report(nullptr, &matrix, nullptr, format,
                    out_dir / (std::string("confusion.") + extension));
        out << render_report(nullptr, &matrix, nullptr, format);
        return 0;
    } catch (const Error& e) {
        err << "analyze-errors: " << e.what() << "\n";
        return 1;
    }
}

int cmd_render(const RunConfig& config, const std::string& conversation_id, UttId target,
               const std::string& step, std::ostream& out, std::ostream& err) {
    try {
        const auto corpus = load_corpus(config.eval_corpus);
        const TemplateSet templates = load_templates(config);
        const Conversation* conversation = nullptr;
        for (const auto& conv : corpus) {
            if (conv.id == conversation_id) conversation = &conv;
        }
        if (!conversation) {
            throw ConfigError("conversation '" + conversation_id + "' not found");
        }
        const PromptMode mode = config.approach == Approach::finetuned_chat ? PromptMode::llama
                                                                            : PromptMode::gpt_icl;
        std::optional<Demonstration> demo;
        if (mode == PromptMode::gpt_icl) {
            demo = Demonstration{"(demonstration placeholder)", "(explanation placeholder)"};
        }
        if (step == "emotion") {
            const auto prompt =
                render_emotion_prompt(*conversation, target, mode, templates, demo);
            out << prompt.text << "\n";
            err << "token estimate: " << prompt.token_estimate << "\n";
        } else if (step == "cause") {
            std::map<UttId, EmotionLabel> gold;
            for (const auto& utt : conversation->utterances) {
                gold[utt.id] = utt.gold_emotion.value_or(EmotionLabel::neutral);
            }
            Scope scope{1, conversation->size()};
            if (mode == PromptMode::gpt_icl) {
                const auto window = extract_window(*conversation, target);
                scope = {window.first_utt_id, window.last_utt_id};
            }
            const auto prompt = render_cause_prompt(*conversation, target, scope, gold, mode,
                                                    templates, demo);
            out << prompt.text << "\n";
            err << "token estimate: " << prompt.token_estimate << "\n";
        } else {
            throw ConfigError("render step must be 'emotion' or 'cause'");
        }
        return 0;
    } catch (const Error& e) {
        err << "render: " << e.what() << "\n";
        return 1;
    }
}

int cmd_window(const std::filesystem::path& corpus_path, const std::string& conversation_id,
               std::ostream& out, std::ostream& err) {
    try {
        const auto corpus = load_corpus(corpus_path);
        for (const auto& conv : corpus) {
            if (!conversation_id.empty() && conv.id != conversation_id) continue;
            for (const auto& utt : conv.utterances) {
                const auto window = extract_window(conv, utt.id);
                out << conv.id << " target " << utt.id << ": [" << window.first_utt_id << ", "
                    << window.last_utt_id << "] " << to_string(window.position) << "\n";
            }
        }
        return 0;
    } catch (const Error& e) {
        err << "window: " << e.what() << "\n";
        return 1;
    }
}

int cmd_validate(const std::filesystem::path& corpus_path,
                 const std::filesystem::path& predictions, std::ostream& out, std::ostream& err) {
    try {
        const auto corpus = load_corpus(corpus_path);
        const auto document = PredictionDocument::load(predictions);
        const auto findings = validate_predictions(corpus, document);
        for (const auto& finding : findings) {
            out << finding.conversation_id << ": " << finding.message << "\n";
        }
        out << findings.size() << " finding(s)\n";
        return findings.empty() ? 0 : 1;
    } catch (const Error& e) {
        err << "validate: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace eca
