#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "eca/corpus.hpp"
#include "eca/windowing.hpp"

namespace eca {

enum class TemplateName {
    llama_emotion,
    llama_cause,
    gpt_emotion_icl,
    gpt_cause_icl,
    emotion_explanation,
    cause_explanation,
    video_caption,
    caption_stitch,
};

std::string_view to_string(TemplateName name);

/// Text template with {placeholder} slots. Rendering is a single-pass pure
/// substitution; every placeholder referenced by the body must be supplied.
struct PromptTemplate {
    TemplateName name = TemplateName::llama_emotion;
    std::string body;

    std::string render(const std::map<std::string, std::string>& values) const;
    static std::vector<std::string> placeholders(const std::string& body);
};

/// All eight templates, loaded from one directory of <name>.txt assets.
class TemplateSet {
public:
    static TemplateSet load(const std::filesystem::path& dir);
    /// Compile-time default asset directory (the repo's assets/templates).
    static std::filesystem::path default_dir();

    const PromptTemplate& get(TemplateName name) const;
    /// Per-template content digests, recorded in run provenance.
    std::map<std::string, std::string> version_digests() const;

private:
    std::map<TemplateName, PromptTemplate> templates_;
};

using TokenEstimator = std::function<int(const std::string&)>;

/// ceil(len/4) characters-per-token upper-bound heuristic.
int default_token_estimate(const std::string& text);

struct RenderedPrompt {
    TemplateName template_name = TemplateName::llama_emotion;
    std::string text;
    int token_estimate = 0;
    bool windowed = false;     // produced by the token-budget fallback
    bool over_budget = false;  // still above budget after the fallback
};

enum class PromptMode { llama, gpt_icl };

/// Retrieved annotated example plus its generated explanation.
struct Demonstration {
    std::string text;
    std::string explanation;
};

struct ParsedEmotion {
    EmotionLabel label = EmotionLabel::neutral;
    std::string raw;
};

struct ParsedCauses {
    std::set<UttId> cause_ids;
    std::string raw;
    std::vector<long> filtered_out;  // integers dropped for being outside valid_ids
};

/// Inclusive utterance-id span a prompt covers.
using Scope = std::pair<UttId, UttId>;

std::string render_utterance_line(const Utterance& utt,
                                  const std::optional<EmotionLabel>& annotation = {});

/// One line per utterance in [first, last]. When `annotations` is given,
/// non-neutral labels are appended to their lines; neutral lines stay bare.
std::string render_conversation_block(const Conversation& conversation, Scope scope,
                                      const std::map<UttId, EmotionLabel>* annotations = nullptr);

/// Unique speaker names in order of first appearance, comma separated.
std::string speaker_block(const Conversation& conversation);

RenderedPrompt render_emotion_prompt(const Conversation& conversation, UttId target_utt_id,
                                     PromptMode mode, const TemplateSet& templates,
                                     const std::optional<Demonstration>& demonstration = {},
                                     const std::optional<std::string>& caption = {},
                                     const std::optional<Scope>& scope = {},
                                     const TokenEstimator& estimator = default_token_estimate);

RenderedPrompt render_cause_prompt(const Conversation& conversation, UttId target_utt_id,
                                   Scope scope, const std::map<UttId, EmotionLabel>& emotions,
                                   PromptMode mode, const TemplateSet& templates,
                                   const std::optional<Demonstration>& demonstration = {},
                                   const std::optional<std::string>& caption = {},
                                   const TokenEstimator& estimator = default_token_estimate);

/// First of the seven labels after the first "::" (case-insensitive, word
/// boundaries); falls back to scanning the whole string. NoLabelError when
/// nothing parseable anywhere — the retry signal.
ParsedEmotion parse_emotion(const std::string& raw);

/// Integers from the first [...] list when brackets are present, all integers
/// otherwise, filtered to valid_ids. An unclosed '[' is UnparseableError;
/// an empty result is a valid "no cause" answer.
ParsedCauses parse_causes(const std::string& raw, const std::set<UttId>& valid_ids);

/// Returns `prompt` unchanged when within budget; otherwise the fallback
/// (windowed) render, flagged over_budget if even that exceeds the budget.
/// Never returns a prompt with a larger token estimate than the input.
RenderedPrompt guard_token_budget(const RenderedPrompt& prompt, int budget,
                                  const std::function<RenderedPrompt()>& fallback);

}  // namespace eca
