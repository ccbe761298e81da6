#include "eca/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "eca/errors.hpp"
#include "eca/prompting.hpp"
#include "eca/util.hpp"

namespace eca {

std::string IndexKey::to_string() const {
    return std::string(eca::to_string(emotion)) + "/" + std::string(eca::to_string(position));
}

IndexKey IndexKey::parse(const std::string& text) {
    const auto sep = text.find('/');
    if (sep == std::string::npos) throw ParseError("bad index key '" + text + "'");
    const auto emotion = parse_emotion_label(text.substr(0, sep));
    const auto position = parse_position_class(text.substr(sep + 1));
    if (!emotion || !is_emotional(*emotion) || !position) {
        throw ParseError("bad index key '" + text + "'");
    }
    return IndexKey{*emotion, *position};
}

std::vector<IndexKey> all_index_keys() {
    std::vector<IndexKey> keys;
    for (EmotionLabel emotion : emotional_labels()) {
        for (PositionClass position :
             {PositionClass::beginning, PositionClass::middle, PositionClass::end}) {
            keys.push_back(IndexKey{emotion, position});
        }
    }
    return keys;
}

namespace {

void check_vector(const std::vector<float>& vec, const std::string& key) {
    if (vec.empty()) throw EmbedderError("embedder returned empty vector for " + key);
    for (float v : vec) {
        if (!std::isfinite(v)) {
            throw EmbedderError("embedder returned non-finite component for " + key);
        }
    }
}

void append_record(VectorIndex& index, EmbeddingRecord record) {
    check_vector(record.vector, record.key);
    if (index.records.empty() && index.dimension == 0) {
        index.dimension = static_cast<int>(record.vector.size());
    }
    if (static_cast<int>(record.vector.size()) != index.dimension) {
        throw DimensionError("record " + record.key + " has dimension " +
                             std::to_string(record.vector.size()) + ", index declares " +
                             std::to_string(index.dimension));
    }
    for (const auto& existing : index.records) {
        if (existing.key == record.key) {
            throw SchemaError("duplicate index key " + record.key);
        }
    }
    index.records.push_back(std::move(record));
}

std::vector<float> run_embedder(const Embedder& embedder, const std::string& text,
                                const std::string& key) {
    std::vector<float> vec;
    try {
        vec = embedder(text);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw EmbedderError(std::string("embedder failed for ") + key + ": " + e.what());
    }
    check_vector(vec, key);
    return vec;
}

std::string annotate_conversation(const Conversation& conv) {
    std::map<UttId, EmotionLabel> gold;
    for (const auto& utt : conv.utterances) {
        gold[utt.id] = utt.gold_emotion.value_or(EmotionLabel::neutral);
    }
    return render_conversation_block(conv, {1, conv.size()}, &gold);
}

std::string annotate_window(const Conversation& conv, const ContextWindow& window) {
    std::map<UttId, EmotionLabel> gold;
    for (const auto& utt : conv.utterances) {
        gold[utt.id] = utt.gold_emotion.value_or(EmotionLabel::neutral);
    }
    std::ostringstream out;
    out << render_conversation_block(conv, {window.first_utt_id, window.last_utt_id}, &gold);
    std::vector<UttId> causes;
    for (const auto& pair : conv.gold_pairs) {
        if (pair.emotion_utt_id == window.target_utt_id) causes.push_back(pair.cause_utt_id);
    }
    std::sort(causes.begin(), causes.end());
    out << "\nCauses of utterance " << window.target_utt_id << ": [";
    for (size_t i = 0; i < causes.size(); ++i) {
        if (i) out << ", ";
        out << causes[i];
    }
    out << "]";
    return out.str();
}

}  // namespace

void PayloadStore::put(const std::string& ref, DemoPayload payload) {
    items_[ref] = std::move(payload);
}

const DemoPayload* PayloadStore::find(const std::string& ref) const {
    const auto it = items_.find(ref);
    return it == items_.end() ? nullptr : &it->second;
}

DemoPayload* PayloadStore::find(const std::string& ref) {
    const auto it = items_.find(ref);
    return it == items_.end() ? nullptr : &it->second;
}

void PayloadStore::save(const std::filesystem::path& path) const {
    nlohmann::json doc;
    for (const auto& [ref, payload] : items_) {
        nlohmann::json node;
        node["kind"] = payload.kind;
        node["conversation_id"] = payload.conversation_id;
        if (payload.kind == "window") {
            node["target_utt_id"] = payload.target_utt_id;
            node["first_utt_id"] = payload.first_utt_id;
            node["last_utt_id"] = payload.last_utt_id;
            node["target_emotion"] = payload.target_emotion;
            node["target_line"] = payload.target_line;
        }
        node["text"] = payload.text;
        node["annotated_text"] = payload.annotated_text;
        node["explanation"] = payload.explanation;
        doc[ref] = std::move(node);
    }
    write_file(path, doc.dump(2) + "\n");
}

PayloadStore PayloadStore::load(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("payload store " + path.string() + ": " + e.what());
    }
    PayloadStore store;
    for (const auto& [ref, node] : doc.items()) {
        DemoPayload payload;
        payload.kind = node.value("kind", "conversation");
        payload.conversation_id = node.value("conversation_id", "");
        payload.target_utt_id = node.value("target_utt_id", 0);
        payload.first_utt_id = node.value("first_utt_id", 0);
        payload.last_utt_id = node.value("last_utt_id", 0);
        payload.target_emotion = node.value("target_emotion", "");
        payload.target_line = node.value("target_line", "");
        payload.text = node.value("text", "");
        payload.annotated_text = node.value("annotated_text", "");
        payload.explanation = node.value("explanation", "");
        store.put(ref, std::move(payload));
    }
    return store;
}

ConversationIndexBuild build_conversation_index(const std::vector<Conversation>& train_corpus,
                                                const std::vector<std::string>& selection,
                                                const Embedder& embedder,
                                                PayloadStore* payloads) {
    std::map<std::string, const Conversation*> byId;
    for (const auto& conv : train_corpus) byId[conv.id] = &conv;

    std::vector<const Conversation*> selected;
    for (const auto& id : selection) {
        const auto it = byId.find(id);
        if (it == byId.end()) {
            throw DanglingRefError("selection references unknown conversation '" + id + "'");
        }
        selected.push_back(it->second);
    }

    ConversationIndexBuild build;
    for (EmotionLabel label : all_emotion_labels()) build.emotion_coverage[label] = 0;
    for (const Conversation* conv : selected) {
        for (const auto& utt : conv->utterances) {
            if (utt.gold_emotion) build.emotion_coverage[*utt.gold_emotion] += 1;
        }
    }
    std::vector<std::string> missing;
    for (const auto& [label, count] : build.emotion_coverage) {
        if (count == 0) missing.emplace_back(to_string(label));
    }
    if (!missing.empty()) {
        std::string list;
        for (size_t i = 0; i < missing.size(); ++i) list += (i ? ", " : "") + missing[i];
        throw CoverageError("selection does not cover emotion categories: " + list);
    }

    build.index.partition = "conversation";
    for (const Conversation* conv : selected) {
        const std::string text = render_conversation_block(*conv, {1, conv->size()});
        EmbeddingRecord record;
        record.key = conv->id;
        record.payload_ref = "conv:" + conv->id;
        record.vector = run_embedder(embedder, text, record.key);
        append_record(build.index, std::move(record));
        if (payloads) {
            DemoPayload payload;
            payload.kind = "conversation";
            payload.conversation_id = conv->id;
            payload.first_utt_id = 1;
            payload.last_utt_id = conv->size();
            payload.text = text;
            payload.annotated_text = annotate_conversation(*conv);
            payloads->put("conv:" + conv->id, std::move(payload));
        }
    }
    return build;
}

std::map<IndexKey, VectorIndex> build_cause_indices(const std::vector<Conversation>& train_corpus,
                                                    const Embedder& embedder,
                                                    PayloadStore* payloads) {
    std::map<IndexKey, VectorIndex> indices;
    for (const IndexKey& key : all_index_keys()) {
        VectorIndex index;
        index.partition = key.to_string();
        indices.emplace(key, std::move(index));
    }

    for (const auto& conv : train_corpus) {
        for (const auto& utt : conv.utterances) {
            if (!utt.gold_emotion || !is_emotional(*utt.gold_emotion)) continue;
            const ContextWindow window = extract_window(conv, utt.id);
            const IndexKey key{*utt.gold_emotion, window.position};
            const std::string text =
                render_conversation_block(conv, {window.first_utt_id, window.last_utt_id});
            EmbeddingRecord record;
            record.key = conv.id + ":" + std::to_string(utt.id);
            record.payload_ref = "win:" + record.key;
            record.vector = run_embedder(embedder, text, record.key);
            append_record(indices.at(key), std::move(record));
            if (payloads) {
                DemoPayload payload;
                payload.kind = "window";
                payload.conversation_id = conv.id;
                payload.target_utt_id = utt.id;
                payload.first_utt_id = window.first_utt_id;
                payload.last_utt_id = window.last_utt_id;
                payload.target_emotion = std::string(to_string(*utt.gold_emotion));
                payload.target_line = render_utterance_line(utt, *utt.gold_emotion);
                payload.text = text;
                payload.annotated_text = annotate_window(conv, window);
                payloads->put("win:" + record.key, std::move(payload));
            }
        }
    }
    return indices;
}

std::vector<ScoredRecord> nearest(const VectorIndex& index, std::span<const float> query, int k) {
    if (k < 1) throw RangeError("k must be >= 1");
    if (index.empty()) throw EmptyIndexError("nearest() on empty index '" + index.partition + "'");
    if (static_cast<int>(query.size()) != index.dimension) {
        throw DimensionError("query dimension " + std::to_string(query.size()) +
                             " != index dimension " + std::to_string(index.dimension));
    }

    std::vector<ScoredRecord> scored;
    scored.reserve(index.records.size());
    for (const auto& record : index.records) {
        double sum = 0.0;
        for (size_t i = 0; i < record.vector.size(); ++i) {
            const double d = static_cast<double>(record.vector[i]) - static_cast<double>(query[i]);
            sum += d * d;
        }
        scored.push_back({record, std::sqrt(sum)});
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredRecord& a, const ScoredRecord& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.record.key < b.record.key;
    });
    if (static_cast<size_t>(k) < scored.size()) scored.resize(static_cast<size_t>(k));
    return scored;
}

namespace {

nlohmann::json index_to_json(const VectorIndex& index) {
    nlohmann::json doc;
    doc["dimension"] = index.dimension;
    doc["partition"] = index.partition;
    nlohmann::json records = nlohmann::json::array();
    for (const auto& record : index.records) {
        nlohmann::json node;
        node["key"] = record.key;
        node["vector"] = record.vector;
        node["payload_ref"] = record.payload_ref;
        records.push_back(std::move(node));
    }
    doc["records"] = std::move(records);
    return doc;
}

VectorIndex index_from_json(const nlohmann::json& doc) {
    VectorIndex index;
    index.dimension = doc.at("dimension").get<int>();
    index.partition = doc.value("partition", "");
    for (const auto& node : doc.at("records")) {
        EmbeddingRecord record;
        record.key = node.at("key").get<std::string>();
        record.vector = node.at("vector").get<std::vector<float>>();
        record.payload_ref = node.value("payload_ref", "");
        if (static_cast<int>(record.vector.size()) != index.dimension) {
            throw DimensionError("index record " + record.key + " dimension mismatch");
        }
        index.records.push_back(std::move(record));
    }
    return index;
}

}  // namespace

void save_index(const VectorIndex& index, const std::filesystem::path& path) {
    write_file(path, index_to_json(index).dump() + "\n");
}

VectorIndex load_index(const std::filesystem::path& path) {
    try {
        return index_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("index file " + path.string() + ": " + e.what());
    }
}

void save_cause_indices(const std::map<IndexKey, VectorIndex>& indices,
                        const std::filesystem::path& path) {
    nlohmann::json doc;
    for (const auto& [key, index] : indices) {
        doc[key.to_string()] = index_to_json(index);
    }
    write_file(path, doc.dump() + "\n");
}

std::map<IndexKey, VectorIndex> load_cause_indices(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("cause index file " + path.string() + ": " + e.what());
    }
    std::map<IndexKey, VectorIndex> indices;
    for (const auto& [keyText, node] : doc.items()) {
        indices.emplace(IndexKey::parse(keyText), index_from_json(node));
    }
    // Missing partitions load as empty indices so all 18 keys always exist.
    for (const IndexKey& key : all_index_keys()) {
        if (!indices.count(key)) {
            VectorIndex index;
            index.partition = key.to_string();
            indices.emplace(key, std::move(index));
        }
    }
    return indices;
}

}  // namespace eca
