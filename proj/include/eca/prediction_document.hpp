#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "eca/corpus.hpp"
#include "eca/evaluation.hpp"

namespace eca {

struct Provenance {
    std::string approach;
    bool use_video_captions = false;
    bool add_self_causes = true;
    bool use_gold_emotions = false;
    std::map<std::string, std::string> template_versions;
    std::string cassette_digest;  // empty outside replay/record runs
    std::string backend;
};

struct ConversationPrediction {
    std::string conversation_id;
    std::map<UttId, EmotionLabel> emotions;
    std::set<EmotionCausePair> pairs;
};

/// Pipeline output: per-conversation emotion labels and pairs, with pair
/// strings shaped like the corpus schema so the scorer reads both sides.
struct PredictionDocument {
    Provenance provenance;
    std::vector<ConversationPrediction> conversations;

    nlohmann::json to_json() const;
    static PredictionDocument from_json(const nlohmann::json& doc);
    void save(const std::filesystem::path& path) const;
    static PredictionDocument load(const std::filesystem::path& path);
};

PairsByConversation pairs_of(const PredictionDocument& document);
LabeledUtterances emotions_of(const PredictionDocument& document);
LabeledUtterances gold_emotions_of(const std::vector<Conversation>& corpus);

struct ValidationFinding {
    std::string conversation_id;
    std::string message;
};

/// Structural checks of a prediction document against a corpus: unknown
/// conversation ids, out-of-range utterance ids, neutral or mismatched pair
/// labels. Empty report iff well-formed.
std::vector<ValidationFinding> validate_predictions(const std::vector<Conversation>& corpus,
                                                    const PredictionDocument& document);

}  // namespace eca
