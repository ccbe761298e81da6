#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "eca/corpus.hpp"
#include "eca/windowing.hpp"

namespace eca {

struct EmbeddingRecord {
    std::string key;            // conversation id, or "<conv>:<target utt>" for windows
    std::vector<float> vector;  // length == owning index dimension, all finite
    std::string payload_ref;    // resolves through a PayloadStore
};

/// (emotion, position) partition for the cause indices; 6 x 3 = 18 keys.
struct IndexKey {
    EmotionLabel emotion = EmotionLabel::anger;
    PositionClass position = PositionClass::beginning;

    auto operator<=>(const IndexKey&) const = default;
    std::string to_string() const;
    static IndexKey parse(const std::string& text);
};

std::vector<IndexKey> all_index_keys();

struct VectorIndex {
    int dimension = 0;
    std::string partition;  // "conversation" or an IndexKey string
    std::vector<EmbeddingRecord> records;

    size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
};

struct ScoredRecord {
    EmbeddingRecord record;
    double distance = 0.0;
};

using Embedder = std::function<std::vector<float>(const std::string&)>;

/// Stored text and annotations behind a payload_ref; the demonstration source.
struct DemoPayload {
    std::string kind;  // "conversation" | "window"
    std::string conversation_id;
    UttId target_utt_id = 0;  // windows only
    UttId first_utt_id = 0;
    UttId last_utt_id = 0;
    std::string text;            // plain rendering (what was embedded)
    std::string annotated_text;  // gold-annotated rendering for demonstrations
    std::string target_emotion;  // windows: gold label of the target utterance
    std::string target_line;     // windows: annotated target utterance line
    std::string explanation;     // cached model explanation; may be empty
};

class PayloadStore {
public:
    void put(const std::string& ref, DemoPayload payload);
    const DemoPayload* find(const std::string& ref) const;
    DemoPayload* find(const std::string& ref);
    size_t size() const { return items_.size(); }
    const std::map<std::string, DemoPayload>& items() const { return items_; }
    std::map<std::string, DemoPayload>& items() { return items_; }

    void save(const std::filesystem::path& path) const;
    static PayloadStore load(const std::filesystem::path& path);

private:
    std::map<std::string, DemoPayload> items_;
};

struct ConversationIndexBuild {
    VectorIndex index;
    std::map<EmotionLabel, long> emotion_coverage;  // across selected conversations
};

/// One record per selected conversation. The selection must jointly cover all
/// seven emotion categories; CoverageError names the missing ones.
ConversationIndexBuild build_conversation_index(const std::vector<Conversation>& train_corpus,
                                                const std::vector<std::string>& selection,
                                                const Embedder& embedder,
                                                PayloadStore* payloads = nullptr);

/// One record per emotional utterance, filed under (gold emotion, position
/// class) of its context window. Always returns all 18 keys, some possibly empty.
std::map<IndexKey, VectorIndex> build_cause_indices(const std::vector<Conversation>& train_corpus,
                                                    const Embedder& embedder,
                                                    PayloadStore* payloads = nullptr);

/// Exhaustive k-nearest by Euclidean distance, ascending; ties broken by key
/// order. Returns min(k, |index|) records.
std::vector<ScoredRecord> nearest(const VectorIndex& index, std::span<const float> query, int k);

void save_index(const VectorIndex& index, const std::filesystem::path& path);
VectorIndex load_index(const std::filesystem::path& path);
void save_cause_indices(const std::map<IndexKey, VectorIndex>& indices,
                        const std::filesystem::path& path);
std::map<IndexKey, VectorIndex> load_cause_indices(const std::filesystem::path& path);

}  // namespace eca
