#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "eca/emotion.hpp"

namespace eca {

/// 1-based utterance id within its conversation.
using UttId = int;

struct Utterance {
    UttId id = 0;
    std::string speaker;
    std::string text;
    std::optional<std::string> video_ref;
    std::optional<std::string> audio_ref;  // preserved opaque, never read
    std::optional<EmotionLabel> gold_emotion;
};

/// (emotion utterance, emotion label, cause utterance). The label is never
/// neutral. Ordered so pair sets serialize deterministically.
struct EmotionCausePair {
    UttId emotion_utt_id = 0;
    EmotionLabel emotion = EmotionLabel::neutral;
    UttId cause_utt_id = 0;

    auto operator<=>(const EmotionCausePair&) const = default;
};

struct Conversation {
    std::string id;
    std::vector<Utterance> utterances;  // sorted by id, ids contiguous 1..M
    std::set<EmotionCausePair> gold_pairs;

    int size() const { return static_cast<int>(utterances.size()); }
    const Utterance& utterance(UttId id) const;
    bool contains(UttId id) const { return id >= 1 && id <= size(); }
    bool has_gold_emotions() const;
};

struct DatasetStats {
    long n_conversations = 0;
    long n_utterances = 0;
    long n_emotional = 0;         // gold emotion != neutral
    long n_self_causal = 0;       // has a pair with cause == emotion utterance
    long n_non_self_causal = 0;   // has >= 1 pair, none of them self
    long n_no_cause_emotional = 0;  // emotional with zero pairs
    long n_later_causal = 0;      // has a pair with cause id > emotion id
    std::map<EmotionLabel, long> emotion_histogram;
    std::map<int, long> relative_position_histogram;  // (cause id - emotion id) -> pair count

    long total_pair_instances() const;
    /// Fraction of pair instances whose offset lies in [lo, hi]; 0 when no pairs.
    double offset_fraction(int lo, int hi) const;
    double self_cause_fraction() const { return offset_fraction(0, 0); }
    double later_cause_fraction() const;
};

enum class CorpusFormat { native_json };

std::vector<Conversation> load_corpus(const std::filesystem::path& path,
                                      CorpusFormat format = CorpusFormat::native_json);
std::vector<Conversation> parse_corpus_json(const nlohmann::json& doc);
nlohmann::json corpus_to_json(const std::vector<Conversation>& corpus);
void save_corpus(const std::vector<Conversation>& corpus, const std::filesystem::path& path);

DatasetStats compute_stats(const std::vector<Conversation>& corpus);
nlohmann::json stats_to_json(const DatasetStats& stats);
std::string emotion_histogram_csv(const DatasetStats& stats);
std::string relative_position_csv(const DatasetStats& stats);

}  // namespace eca
