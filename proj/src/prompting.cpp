#include "eca/prompting.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <limits>
#include <regex>
#include <sstream>

#include "eca/errors.hpp"
#include "eca/util.hpp"

namespace eca {

namespace {

constexpr std::array<TemplateName, 8> kAllTemplates = {
    TemplateName::llama_emotion,     TemplateName::llama_cause,
    TemplateName::gpt_emotion_icl,   TemplateName::gpt_cause_icl,
    TemplateName::emotion_explanation, TemplateName::cause_explanation,
    TemplateName::video_caption,     TemplateName::caption_stitch,
};

const std::set<std::string>& known_placeholders() {
    static const std::set<std::string> names = {
        "conversation", "window",           "demonstration", "explanation",
        "caption",      "target_utterance", "emotion",       "speaker_block",
    };
    return names;
}

const std::string kNoCaption = "(no video description provided)";
const std::string kNoDemonstration = "(no demonstration available)";

}  // namespace

std::string_view to_string(TemplateName name) {
    switch (name) {
        case TemplateName::llama_emotion: return "llama_emotion";
        case TemplateName::llama_cause: return "llama_cause";
        case TemplateName::gpt_emotion_icl: return "gpt_emotion_icl";
        case TemplateName::gpt_cause_icl: return "gpt_cause_icl";
        case TemplateName::emotion_explanation: return "emotion_explanation";
        case TemplateName::cause_explanation: return "cause_explanation";
        case TemplateName::video_caption: return "video_caption";
        case TemplateName::caption_stitch: return "caption_stitch";
    }
    return "llama_emotion";
}

std::vector<std::string> PromptTemplate::placeholders(const std::string& body) {
    std::vector<std::string> found;
    static const std::regex pattern(R"(\{([a-z_]+)\})");
    for (auto it = std::sregex_iterator(body.begin(), body.end(), pattern);
         it != std::sregex_iterator(); ++it) {
        const std::string name = (*it)[1].str();
        if (std::find(found.begin(), found.end(), name) == found.end()) found.push_back(name);
    }
    return found;
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
    for (const auto& placeholder : placeholders(body)) {
        if (!values.count(placeholder)) {
            throw PlaceholderError("template " + std::string(to_string(name)) +
                                   ": placeholder {" + placeholder + "} not supplied");
        }
    }
    std::string out;
    out.reserve(body.size());
    size_t pos = 0;
    while (pos < body.size()) {
        const size_t open = body.find('{', pos);
        if (open == std::string::npos) {
            out.append(body, pos, std::string::npos);
            break;
        }
        const size_t close = body.find('}', open + 1);
        std::string key;
        if (close != std::string::npos) key = body.substr(open + 1, close - open - 1);
        const auto it = values.find(key);
        if (!key.empty() && it != values.end()) {
            out.append(body, pos, open - pos);
            out.append(it->second);
            pos = close + 1;
        } else {
            out.append(body, pos, open + 1 - pos);
            pos = open + 1;
        }
    }
    return out;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
    TemplateSet set;
    for (TemplateName name : kAllTemplates) {
        const auto path = dir / (std::string(to_string(name)) + ".txt");
        PromptTemplate tmpl{name, read_file(path)};
        for (const auto& placeholder : PromptTemplate::placeholders(tmpl.body)) {
            if (!known_placeholders().count(placeholder)) {
                throw PlaceholderError("template file " + path.string() +
                                       ": unknown placeholder {" + placeholder + "}");
            }
        }
        set.templates_.emplace(name, std::move(tmpl));
    }
    return set;
}

std::filesystem::path TemplateSet::default_dir() {
#ifdef ECA_TEMPLATE_DIR
    return std::filesystem::path(ECA_TEMPLATE_DIR);
#else
    return std::filesystem::path("assets/templates");
#endif
}

const PromptTemplate& TemplateSet::get(TemplateName name) const {
    return templates_.at(name);
}

std::map<std::string, std::string> TemplateSet::version_digests() const {
    std::map<std::string, std::string> digests;
    for (const auto& [name, tmpl] : templates_) {
        digests[std::string(to_string(name))] = to_hex(fnv1a64(tmpl.body));
    }
    return digests;
}

int default_token_estimate(const std::string& text) {
    return static_cast<int>((text.size() + 3) / 4);
}

std::string render_utterance_line(const Utterance& utt,
                                  const std::optional<EmotionLabel>& annotation) {
    std::string line = std::to_string(utt.id) + ". " + utt.speaker;
    if (annotation && is_emotional(*annotation)) {
        line += " (" + std::string(to_string(*annotation)) + ")";
    }
    line += ": " + utt.text;
    return line;
}

std::string render_conversation_block(const Conversation& conversation, Scope scope,
                                      const std::map<UttId, EmotionLabel>* annotations) {
    if (scope.first < 1 || scope.second > conversation.size() || scope.first > scope.second) {
        throw RangeError("conversation " + conversation.id + ": bad scope " +
                         std::to_string(scope.first) + ".." + std::to_string(scope.second));
    }
    std::ostringstream out;
    for (UttId id = scope.first; id <= scope.second; ++id) {
        std::optional<EmotionLabel> annotation;
        if (annotations) {
            const auto it = annotations->find(id);
            if (it == annotations->end()) {
                throw PlaceholderError("conversation " + conversation.id + ": no emotion label for utterance " +
                                       std::to_string(id) + " in annotated scope");
            }
            annotation = it->second;
        }
        if (id > scope.first) out << "\n";
        out << render_utterance_line(conversation.utterance(id), annotation);
    }
    return out.str();
}

std::string speaker_block(const Conversation& conversation) {
    std::vector<std::string> speakers;
    for (const auto& utt : conversation.utterances) {
        if (std::find(speakers.begin(), speakers.end(), utt.speaker) == speakers.end()) {
            speakers.push_back(utt.speaker);
        }
    }
    std::string out;
    for (size_t i = 0; i < speakers.size(); ++i) {
        if (i) out += ", ";
        out += speakers[i];
    }
    return out;
}

namespace {

RenderedPrompt finish(const PromptTemplate& tmpl, const std::map<std::string, std::string>& values,
                      const TokenEstimator& estimator, bool windowed) {
    RenderedPrompt prompt;
    prompt.template_name = tmpl.name;
    prompt.text = tmpl.render(values);
    prompt.token_estimate = estimator(prompt.text);
    prompt.windowed = windowed;
    return prompt;
}

}  // namespace

RenderedPrompt render_emotion_prompt(const Conversation& conversation, UttId target_utt_id,
                                     PromptMode mode, const TemplateSet& templates,
                                     const std::optional<Demonstration>& demonstration,
                                     const std::optional<std::string>& caption,
                                     const std::optional<Scope>& scope,
                                     const TokenEstimator& estimator) {
    if (!conversation.contains(target_utt_id)) {
        throw RangeError("conversation " + conversation.id + ": target " +
                         std::to_string(target_utt_id) + " out of range");
    }
    if (mode == PromptMode::gpt_icl && !demonstration) {
        throw MissingDemonstrationError("gpt_icl emotion prompt requires a demonstration");
    }
    if (mode == PromptMode::llama && demonstration) {
        throw MissingDemonstrationError("llama emotion prompt takes no demonstration");
    }
    const Scope span = scope.value_or(Scope{1, conversation.size()});
    if (target_utt_id < span.first || target_utt_id > span.second) {
        throw RangeError("target outside rendered scope");
    }

    std::map<std::string, std::string> values;
    values["speaker_block"] = speaker_block(conversation);
    values["conversation"] = render_conversation_block(conversation, span);
    values["target_utterance"] = render_utterance_line(conversation.utterance(target_utt_id));
    if (mode == PromptMode::gpt_icl) {
        values["demonstration"] = demonstration->text;
        values["explanation"] = demonstration->explanation;
        values["caption"] = caption.value_or(kNoCaption);
    }
    const auto& tmpl = templates.get(mode == PromptMode::llama ? TemplateName::llama_emotion
                                                               : TemplateName::gpt_emotion_icl);
    return finish(tmpl, values, estimator, scope.has_value());
}

RenderedPrompt render_cause_prompt(const Conversation& conversation, UttId target_utt_id,
                                   Scope scope, const std::map<UttId, EmotionLabel>& emotions,
                                   PromptMode mode, const TemplateSet& templates,
                                   const std::optional<Demonstration>& demonstration,
                                   const std::optional<std::string>& caption,
                                   const TokenEstimator& estimator) {
    if (!conversation.contains(target_utt_id)) {
        throw RangeError("conversation " + conversation.id + ": target " +
                         std::to_string(target_utt_id) + " out of range");
    }
    if (target_utt_id < scope.first || target_utt_id > scope.second) {
        throw RangeError("target outside cause scope");
    }
    const auto targetLabel = emotions.find(target_utt_id);
    if (targetLabel == emotions.end()) {
        throw PlaceholderError("no predicted emotion for target utterance " +
                               std::to_string(target_utt_id));
    }
    if (!is_emotional(targetLabel->second)) {
        throw NeutralTargetError("cause prompt rejected: target utterance " +
                                 std::to_string(target_utt_id) + " is labeled neutral");
    }

    std::map<std::string, std::string> values;
    const std::string block = render_conversation_block(conversation, scope, &emotions);
    values["conversation"] = block;
    values["window"] = block;
    values["target_utterance"] =
        render_utterance_line(conversation.utterance(target_utt_id), targetLabel->second);
    values["emotion"] = std::string(to_string(targetLabel->second));
    if (mode == PromptMode::gpt_icl) {
        values["demonstration"] = demonstration ? demonstration->text : kNoDemonstration;
        values["explanation"] = demonstration ? demonstration->explanation : kNoDemonstration;
        values["caption"] = caption.value_or(kNoCaption);
    }
    const auto& tmpl = templates.get(mode == PromptMode::llama ? TemplateName::llama_cause
                                                               : TemplateName::gpt_cause_icl);
    return finish(tmpl, values, estimator, false);
}

ParsedEmotion parse_emotion(const std::string& raw) {
    static const std::regex pattern(
        R"(\b(anger|disgust|fear|joy|sadness|surprise|neutral)\b)",
        std::regex::icase);

    const auto scan = [&](size_t from) -> std::optional<EmotionLabel> {
        std::smatch match;
        std::string tail = raw.substr(from);
        if (std::regex_search(tail, match, pattern)) {
            return parse_emotion_label(to_lower(match[1].str()));
        }
        return std::nullopt;
    };

    const size_t marker = raw.find("::");
    if (marker != std::string::npos) {
        if (auto label = scan(marker + 2)) return {*label, raw};
    }
    if (auto label = scan(0)) return {*label, raw};
    throw NoLabelError("no emotion label found in model output");
}

ParsedCauses parse_causes(const std::string& raw, const std::set<UttId>& valid_ids) {
    if (valid_ids.empty()) throw RangeError("parse_causes requires non-empty valid_ids");

    std::string_view digits_source = raw;
    const size_t open = raw.find('[');
    if (open != std::string::npos) {
        const size_t close = raw.find(']', open + 1);
        if (close == std::string::npos) {
            throw UnparseableError("unterminated bracketed list in model output");
        }
        digits_source = std::string_view(raw).substr(open + 1, close - open - 1);
    }

    ParsedCauses parsed;
    parsed.raw = raw;
    size_t i = 0;
    while (i < digits_source.size()) {
        if (!std::isdigit(static_cast<unsigned char>(digits_source[i]))) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j < digits_source.size() &&
               std::isdigit(static_cast<unsigned char>(digits_source[j]))) {
            ++j;
        }
        long value = 0;
        try {
            value = std::stol(std::string(digits_source.substr(i, j - i)));
        } catch (const std::out_of_range&) {
            value = -1;  // absurdly long digit run; treat as out of range
        }
        if (value >= 1 && value <= std::numeric_limits<UttId>::max() &&
            valid_ids.count(static_cast<UttId>(value))) {
            parsed.cause_ids.insert(static_cast<UttId>(value));
        } else {
            parsed.filtered_out.push_back(value);
        }
        i = j;
    }
    return parsed;
}

RenderedPrompt guard_token_budget(const RenderedPrompt& prompt, int budget,
                                  const std::function<RenderedPrompt()>& fallback) {
    if (budget <= 0) throw RangeError("token budget must be positive");
    if (prompt.token_estimate <= budget) return prompt;
    RenderedPrompt windowed = fallback();
    windowed.windowed = true;
    if (windowed.token_estimate > prompt.token_estimate) {
        // A fallback must not make things worse; keep the original, flagged.
        windowed = prompt;
    }
    windowed.over_budget = windowed.token_estimate > budget;
    return windowed;
}

}  // namespace eca
