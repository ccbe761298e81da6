#include "eca/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace eca {

std::string_view to_string(Approach approach) {
    return approach == Approach::finetuned_chat ? "finetuned_chat" : "icl";
}

std::optional<Approach> parse_approach(std::string_view text) {
    if (text == "finetuned_chat" || text == "finetuned") return Approach::finetuned_chat;
    if (text == "icl") return Approach::icl;
    return std::nullopt;
}

void PipelineConfig::validate() const {
    if (max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
    if (token_budget < 1) throw ConfigError("token_budget must be >= 1");
    if (caption_batch_size < 1) throw ConfigError("caption_batch_size must be >= 1");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (approach == Approach::icl) {
        if (!conversation_index || conversation_index->empty()) {
            throw ConfigError("icl requires a non-empty conversation index");
        }
        if (!cause_indices || cause_indices->size() != all_index_keys().size()) {
            throw ConfigError("icl requires the 18 cause indices");
        }
        if (!payloads) throw ConfigError("icl requires the payload store");
    }
}

namespace {

void trace(ConversationRun* run, std::string purpose, const std::string& conv, UttId utt) {
    if (run) run->trace.push_back({std::move(purpose), conv, utt});
}

ModelRequest chat_request(const PipelineConfig& config, const std::string& prompt,
                          std::string tag) {
    ModelRequest request;
    request.kind = RequestKind::chat;
    request.model_id = config.chat_model;
    request.max_output_tokens = config.max_output_tokens;
    request.messages = {{"user", prompt}};
    request.trace_tag = std::move(tag);
    return request;
}

std::vector<float> embed_text(const PipelineConfig& config, Backend& backend,
                              const std::string& text, std::string tag) {
    ModelRequest request;
    request.kind = RequestKind::embedding;
    request.model_id = config.embedding_model;
    request.input_text = text;
    request.trace_tag = std::move(tag);
    return complete(request, backend).embedding;
}

std::optional<Demonstration> demonstration_from(const PayloadStore& payloads,
                                                const EmbeddingRecord& record) {
    const DemoPayload* payload = payloads.find(record.payload_ref);
    if (!payload) return std::nullopt;
    return Demonstration{payload->annotated_text, payload->explanation};
}

std::optional<std::string> conversation_caption(const Conversation& conversation,
                                                const PipelineConfig& config, Backend& backend,
                                                const TemplateSet& templates,
                                                ConversationRun* run) {
    if (!config.use_video_captions) return std::nullopt;
    const auto cached = config.caption_cache.find(conversation.id);
    if (cached != config.caption_cache.end()) return cached->second;

    CaptionOptions options;
    options.batch_size = config.caption_batch_size;
    options.vision_model = config.vision_model;
    options.chat_model = config.chat_model;
    options.max_output_tokens = config.max_output_tokens;
    options.media_root = config.media_root;
    const CaptionResult result = caption_conversation(conversation, backend, templates, options);
    if (run) {
        for (const auto& batch : result.batches) {
            for (UttId id : batch.utterance_ids) {
                if (std::find(result.skipped.begin(), result.skipped.end(), id) ==
                    result.skipped.end()) {
                    trace(run, "vision", conversation.id, id);
                }
            }
        }
        for (UttId id : result.skipped) {
            run->warnings.push_back("conversation " + conversation.id + ": utterance " +
                                    std::to_string(id) + " video unreadable, caption skipped");
        }
        if (result.stitch_calls > 0) trace(run, "stitch", conversation.id, 0);
        run->caption = result.caption;
    }
    return result.caption;
}

}  // namespace

std::map<UttId, EmotionLabel> predict_emotions(const Conversation& conversation,
                                               const PipelineConfig& config, Backend& backend,
                                               const TemplateSet& templates,
                                               ConversationRun* run) {
    std::optional<Demonstration> demonstration;
    std::optional<std::string> caption;
    if (config.approach == Approach::icl) {
        caption = conversation_caption(conversation, config, backend, templates, run);
        const std::string text = render_conversation_block(conversation, {1, conversation.size()});
        const auto query = embed_text(config, backend, text, "embed-conv:" + conversation.id);
        trace(run, "embedding", conversation.id, 0);
        const auto neighbors = nearest(*config.conversation_index, query, config.demonstrations);
        demonstration = demonstration_from(*config.payloads, neighbors.front().record);
        if (!demonstration && run) {
            run->warnings.push_back("conversation " + conversation.id +
                                    ": demonstration payload missing for key " +
                                    neighbors.front().record.key);
        }
    }
    const PromptMode mode =
        config.approach == Approach::finetuned_chat ? PromptMode::llama : PromptMode::gpt_icl;

    std::map<UttId, EmotionLabel> labels;
    for (const auto& utt : conversation.utterances) {
        RenderedPrompt prompt =
            render_emotion_prompt(conversation, utt.id, mode, templates, demonstration, caption);
        prompt = guard_token_budget(prompt, config.token_budget, [&] {
            const ContextWindow window = extract_window(conversation, utt.id);
            return render_emotion_prompt(conversation, utt.id, mode, templates, demonstration,
                                         caption,
                                         Scope{window.first_utt_id, window.last_utt_id});
        });

        const std::string tag = "emotion:" + conversation.id + ":" + std::to_string(utt.id);
        trace(run, "emotion", conversation.id, utt.id);
        try {
            const ParsedEmotion parsed = complete_with_retry<ParsedEmotion>(
                chat_request(config, prompt.text, tag), backend, {config.max_attempts},
                [](const ModelResponse& response) -> std::optional<ParsedEmotion> {
                    try {
                        return parse_emotion(response.content);
                    } catch (const NoLabelError&) {
                        return std::nullopt;
                    }
                });
            labels[utt.id] = parsed.label;
        } catch (const RetriesExhaustedError& e) {
            // Default to neutral so the utterance drops out of the cause step.
            labels[utt.id] = EmotionLabel::neutral;
            if (run) {
                run->failures.push_back({conversation.id, utt.id, "emotion", e.what()});
            }
        }
    }
    return labels;
}

std::set<EmotionCausePair> predict_causes(const Conversation& conversation,
                                          const std::map<UttId, EmotionLabel>& emotions,
                                          const PipelineConfig& config, Backend& backend,
                                          const TemplateSet& templates, ConversationRun* run) {
    for (const auto& utt : conversation.utterances) {
        if (!emotions.count(utt.id)) {
            throw RangeError("emotions map does not cover utterance " + std::to_string(utt.id));
        }
    }

    std::optional<std::string> caption;
    if (config.approach == Approach::icl && config.use_video_captions) {
        // The emotion step already produced (or fetched) the caption.
        if (run && !run->caption.empty()) {
            caption = run->caption;
        } else {
            const auto cached = config.caption_cache.find(conversation.id);
            if (cached != config.caption_cache.end()) caption = cached->second;
        }
    }

    std::set<EmotionCausePair> pairs;
    for (const auto& utt : conversation.utterances) {
        const EmotionLabel label = emotions.at(utt.id);
        if (!is_emotional(label)) continue;

        Scope scope{1, conversation.size()};
        std::optional<Demonstration> demonstration;
        if (config.approach == Approach::icl) {
            const ContextWindow window = extract_window(conversation, utt.id);
            scope = {window.first_utt_id, window.last_utt_id};
            const IndexKey key{label, window.position};
            const VectorIndex& index = config.cause_indices->at(key);
            if (index.empty()) {
                if (run) {
                    run->warnings.push_back("conversation " + conversation.id + ": cause index " +
                                            key.to_string() +
                                            " is empty; prompting without a demonstration");
                }
            } else {
                const std::string text = render_conversation_block(conversation, scope);
                const auto query = embed_text(
                    config, backend, text,
                    "embed-win:" + conversation.id + ":" + std::to_string(utt.id));
                trace(run, "embedding", conversation.id, utt.id);
                const auto neighbors = nearest(index, query, config.demonstrations);
                demonstration = demonstration_from(*config.payloads, neighbors.front().record);
            }
        }

        const PromptMode mode =
            config.approach == Approach::finetuned_chat ? PromptMode::llama : PromptMode::gpt_icl;
        const RenderedPrompt prompt = render_cause_prompt(conversation, utt.id, scope, emotions,
                                                          mode, templates, demonstration, caption);

        std::set<UttId> valid;
        for (UttId id = scope.first; id <= scope.second; ++id) valid.insert(id);

        const std::string tag = "cause:" + conversation.id + ":" + std::to_string(utt.id);
        trace(run, "cause", conversation.id, utt.id);
        try {
            const ParsedCauses parsed = complete_with_retry<ParsedCauses>(
                chat_request(config, prompt.text, tag), backend, {config.max_attempts},
                [&valid](const ModelResponse& response) -> std::optional<ParsedCauses> {
                    try {
                        return parse_causes(response.content, valid);
                    } catch (const UnparseableError&) {
                        return std::nullopt;
                    }
                });
            if (run && !parsed.filtered_out.empty()) {
                std::string dropped;
                for (size_t i = 0; i < parsed.filtered_out.size(); ++i) {
                    dropped += (i ? ", " : "") + std::to_string(parsed.filtered_out[i]);
                }
                run->warnings.push_back("conversation " + conversation.id + ": utterance " +
                                        std::to_string(utt.id) +
                                        " cause answer mentioned out-of-scope ids: " + dropped);
            }
            for (UttId cause : parsed.cause_ids) {
                pairs.insert(EmotionCausePair{utt.id, label, cause});
            }
        } catch (const RetriesExhaustedError& e) {
            if (run) {
                run->failures.push_back({conversation.id, utt.id, "cause", e.what()});
            }
        }
    }
    return pairs;
}

std::set<EmotionCausePair> add_self_causes(const std::set<EmotionCausePair>& pairs,
                                           const std::map<UttId, EmotionLabel>& emotions) {
    std::set<EmotionCausePair> result = pairs;
    for (const auto& [id, label] : emotions) {
        if (is_emotional(label)) {
            result.insert(EmotionCausePair{id, label, id});
        }
    }
    return result;
}

RunResult run_pipeline(const std::vector<Conversation>& corpus, const PipelineConfig& config,
                       Backend& backend, const TemplateSet& templates) {
    config.validate();

    struct Entry {
        ConversationPrediction prediction;
        ConversationRun run;
    };
    std::vector<Entry> entries(corpus.size());

    const auto process = [&](size_t index) {
        const Conversation& conversation = corpus[index];
        Entry& entry = entries[index];
        entry.prediction.conversation_id = conversation.id;
        entry.prediction.emotions =
            config.use_gold_emotions
                ? [&] {
                      std::map<UttId, EmotionLabel> gold;
                      for (const auto& utt : conversation.utterances) {
                          gold[utt.id] = utt.gold_emotion.value_or(EmotionLabel::neutral);
                      }
                      return gold;
                  }()
                : predict_emotions(conversation, config, backend, templates, &entry.run);
        entry.prediction.pairs = predict_causes(conversation, entry.prediction.emotions, config,
                                                backend, templates, &entry.run);
        if (config.add_self_causes) {
            entry.prediction.pairs =
                add_self_causes(entry.prediction.pairs, entry.prediction.emotions);
        }
    };

    if (config.jobs <= 1 || corpus.size() <= 1) {
        for (size_t i = 0; i < corpus.size(); ++i) process(i);
    } else {
        std::atomic<size_t> cursor{0};
        std::vector<std::thread> workers;
        const int count = std::min<int>(config.jobs, static_cast<int>(corpus.size()));
        workers.reserve(static_cast<size_t>(count));
        for (int w = 0; w < count; ++w) {
            workers.emplace_back([&] {
                while (true) {
                    const size_t i = cursor.fetch_add(1);
                    if (i >= corpus.size()) return;
                    process(i);
                }
            });
        }
        for (auto& worker : workers) worker.join();
    }

    RunResult result;
    result.document.provenance.approach = std::string(to_string(config.approach));
    result.document.provenance.use_video_captions = config.use_video_captions;
    result.document.provenance.add_self_causes = config.add_self_causes;
    result.document.provenance.use_gold_emotions = config.use_gold_emotions;
    result.document.provenance.template_versions = templates.version_digests();
    result.document.provenance.backend = backend.describe();
    for (size_t i = 0; i < corpus.size(); ++i) {
        result.document.conversations.push_back(std::move(entries[i].prediction));
        result.traces[corpus[i].id] = std::move(entries[i].run.trace);
        for (auto& failure : entries[i].run.failures) result.failures.push_back(std::move(failure));
        for (auto& warning : entries[i].run.warnings) result.warnings.push_back(std::move(warning));
    }
    return result;
}

}  // namespace eca
