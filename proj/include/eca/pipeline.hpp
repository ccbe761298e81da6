#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "eca/corpus.hpp"
#include "eca/gateway.hpp"
#include "eca/montage.hpp"
#include "eca/prediction_document.hpp"
#include "eca/prompting.hpp"
#include "eca/retrieval.hpp"

namespace eca {

enum class Approach { finetuned_chat, icl };

std::string_view to_string(Approach approach);
std::optional<Approach> parse_approach(std::string_view text);

struct PipelineConfig {
    Approach approach = Approach::finetuned_chat;
    bool use_video_captions = false;
    bool add_self_causes = true;
    bool use_gold_emotions = false;  // ablation: feed gold labels to the cause step
    int max_attempts = 3;
    int demonstrations = 1;  // retrieved examples per query
    int token_budget = 4096;
    int caption_batch_size = 8;
    int max_output_tokens = 256;
    std::string chat_model = "gpt-3.5-turbo";
    std::string vision_model = "gpt-4-vision-preview";
    std::string embedding_model = "text-embedding-ada-002";
    std::filesystem::path media_root;
    int jobs = 1;  // conversations processed in parallel

    // icl resources; finetuned_chat ignores them
    std::shared_ptr<const VectorIndex> conversation_index;
    std::shared_ptr<const std::map<IndexKey, VectorIndex>> cause_indices;
    std::shared_ptr<const PayloadStore> payloads;
    std::map<std::string, std::string> caption_cache;  // conversation id -> caption

    void validate() const;  // ConfigError when icl resources are missing
};

struct UtteranceFailure {
    std::string conversation_id;
    UttId utt_id = 0;
    std::string stage;  // "emotion" | "cause"
    std::string message;
};

struct TraceEvent {
    std::string purpose;  // emotion | cause | embedding | vision | stitch
    std::string conversation_id;
    UttId utt_id = 0;  // 0 for conversation-level events
};

/// Per-conversation log collected while predicting; the two-step ordering
/// assertions read the trace.
struct ConversationRun {
    std::vector<TraceEvent> trace;
    std::vector<UtteranceFailure> failures;
    std::vector<std::string> warnings;
    std::string caption;
};

std::map<UttId, EmotionLabel> predict_emotions(const Conversation& conversation,
                                               const PipelineConfig& config, Backend& backend,
                                               const TemplateSet& templates,
                                               ConversationRun* run = nullptr);

std::set<EmotionCausePair> predict_causes(const Conversation& conversation,
                                          const std::map<UttId, EmotionLabel>& emotions,
                                          const PipelineConfig& config, Backend& backend,
                                          const TemplateSet& templates,
                                          ConversationRun* run = nullptr);

/// pairs ∪ {(j, emotions[j], j) : emotions[j] != neutral}; idempotent and
/// monotone.
std::set<EmotionCausePair> add_self_causes(const std::set<EmotionCausePair>& pairs,
                                           const std::map<UttId, EmotionLabel>& emotions);

struct RunResult {
    PredictionDocument document;
    std::vector<UtteranceFailure> failures;
    std::vector<std::string> warnings;
    std::map<std::string, std::vector<TraceEvent>> traces;  // keyed by conversation id
};

/// Two-step composition over the corpus: emotions, then causes for every
/// non-neutral utterance, then optional self-cause post-processing.
/// Per-utterance failures are collected and the run continues.
RunResult run_pipeline(const std::vector<Conversation>& corpus, const PipelineConfig& config,
                       Backend& backend, const TemplateSet& templates);

}  // namespace eca
