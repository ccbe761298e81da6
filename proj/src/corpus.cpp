#include "eca/corpus.hpp"

#include <algorithm>
#include <sstream>

#include "eca/errors.hpp"
#include "eca/util.hpp"

namespace eca {

namespace {

std::string conv_label(const nlohmann::json& entry, size_t position) {
    if (entry.is_object() && entry.contains("conversation_ID")) {
        const auto& id = entry.at("conversation_ID");
        if (id.is_string()) return id.get<std::string>();
        if (id.is_number_integer()) return std::to_string(id.get<long>());
    }
    return "#" + std::to_string(position);
}

// Pair tokens: emotion side "<id>_<label>", cause side "<id>" with anything
// after a following '_' ignored (some published files append span text there).
std::pair<UttId, EmotionLabel> parse_emotion_token(const std::string& token,
                                                   const std::string& where) {
    const auto sep = token.find('_');
    if (sep == std::string::npos || sep == 0) {
        throw SchemaError(where + ": malformed pair emotion token '" + token + "'");
    }
    UttId id = 0;
    try {
        size_t used = 0;
        id = std::stoi(token.substr(0, sep), &used);
        if (used != sep) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw SchemaError(where + ": non-numeric utterance id in pair token '" + token + "'");
    }
    const auto label = parse_emotion_label(token.substr(sep + 1));
    if (!label) {
        throw SchemaError(where + ": unknown emotion in pair token '" + token + "'");
    }
    if (*label == EmotionLabel::neutral) {
        throw SchemaError(where + ": neutral emotion in pair token '" + token + "'");
    }
    return {id, *label};
}

UttId parse_cause_token(const std::string& token, const std::string& where) {
    size_t digits = 0;
    while (digits < token.size() && std::isdigit(static_cast<unsigned char>(token[digits]))) {
        ++digits;
    }
    if (digits == 0 || (digits < token.size() && token[digits] != '_')) {
        throw SchemaError(where + ": malformed pair cause token '" + token + "'");
    }
    return std::stoi(token.substr(0, digits));
}

Utterance parse_utterance(const nlohmann::json& node, const std::string& where) {
    if (!node.is_object()) throw SchemaError(where + ": utterance is not an object");
    Utterance utt;
    if (!node.contains("utterance_ID") || !node.at("utterance_ID").is_number_integer()) {
        throw SchemaError(where + ": missing integer utterance_ID");
    }
    utt.id = node.at("utterance_ID").get<int>();
    if (utt.id < 1) throw SchemaError(where + ": utterance_ID must be positive");
    if (!node.contains("text") || !node.at("text").is_string()) {
        throw SchemaError(where + ": utterance " + std::to_string(utt.id) + " missing text");
    }
    utt.text = node.at("text").get<std::string>();
    if (trim(utt.text).empty()) {
        throw SchemaError(where + ": utterance " + std::to_string(utt.id) + " has empty text");
    }
    if (!node.contains("speaker") || !node.at("speaker").is_string()) {
        throw SchemaError(where + ": utterance " + std::to_string(utt.id) + " missing speaker");
    }
    utt.speaker = node.at("speaker").get<std::string>();
    if (node.contains("emotion")) {
        const auto& emo = node.at("emotion");
        if (!emo.is_string()) {
            throw SchemaError(where + ": utterance " + std::to_string(utt.id) +
                              " emotion must be a string");
        }
        const auto label = parse_emotion_label(emo.get<std::string>());
        if (!label) {
            throw SchemaError(where + ": utterance " + std::to_string(utt.id) +
                              " has unknown emotion '" + emo.get<std::string>() + "'");
        }
        utt.gold_emotion = *label;
    }
    if (node.contains("video_name") && node.at("video_name").is_string()) {
        utt.video_ref = node.at("video_name").get<std::string>();
    }
    if (node.contains("audio_name") && node.at("audio_name").is_string()) {
        utt.audio_ref = node.at("audio_name").get<std::string>();
    }
    return utt;
}

Conversation parse_conversation(const nlohmann::json& entry, size_t position) {
    const std::string where = "conversation " + conv_label(entry, position);
    if (!entry.is_object()) throw SchemaError(where + ": entry is not an object");
    if (!entry.contains("conversation_ID")) {
        throw SchemaError(where + ": missing conversation_ID");
    }

    Conversation conv;
    conv.id = conv_label(entry, position);
    if (!entry.contains("conversation") || !entry.at("conversation").is_array() ||
        entry.at("conversation").empty()) {
        throw SchemaError(where + ": missing non-empty utterance array");
    }
    for (const auto& node : entry.at("conversation")) {
        conv.utterances.push_back(parse_utterance(node, where));
    }
    std::sort(conv.utterances.begin(), conv.utterances.end(),
              [](const Utterance& a, const Utterance& b) { return a.id < b.id; });
    for (int i = 0; i < conv.size(); ++i) {
        if (conv.utterances[i].id != i + 1) {
            throw SchemaError(where + ": utterance ids not contiguous 1..M (saw " +
                              std::to_string(conv.utterances[i].id) + " at position " +
                              std::to_string(i + 1) + ")");
        }
    }

    if (entry.contains("emotion-cause_pairs")) {
        const auto& pairs = entry.at("emotion-cause_pairs");
        if (!pairs.is_array()) throw SchemaError(where + ": emotion-cause_pairs must be an array");
        for (const auto& pairNode : pairs) {
            if (!pairNode.is_array() || pairNode.size() != 2 || !pairNode[0].is_string() ||
                !pairNode[1].is_string()) {
                throw SchemaError(where + ": each pair must be [\"<id>_<emotion>\", \"<id>\"]");
            }
            const auto [emoId, label] = parse_emotion_token(pairNode[0].get<std::string>(), where);
            const UttId causeId = parse_cause_token(pairNode[1].get<std::string>(), where);
            if (!conv.contains(emoId) || !conv.contains(causeId)) {
                throw DanglingRefError(where + ": pair references utterance out of range 1.." +
                                       std::to_string(conv.size()));
            }
            const auto& gold = conv.utterances[emoId - 1].gold_emotion;
            if (gold && *gold != label) {
                throw SchemaError(where + ": pair labels utterance " + std::to_string(emoId) +
                                  " as " + std::string(to_string(label)) +
                                  " but its gold emotion is " + std::string(to_string(*gold)));
            }
            conv.gold_pairs.insert(EmotionCausePair{emoId, label, causeId});
        }
    }
    return conv;
}

}  // namespace

const Utterance& Conversation::utterance(UttId id) const {
    if (!contains(id)) {
        throw RangeError("conversation " + this->id + ": utterance id " + std::to_string(id) +
                         " out of range 1.." + std::to_string(size()));
    }
    return utterances[static_cast<size_t>(id) - 1];
}

bool Conversation::has_gold_emotions() const {
    return std::all_of(utterances.begin(), utterances.end(),
                       [](const Utterance& u) { return u.gold_emotion.has_value(); });
}

std::vector<Conversation> parse_corpus_json(const nlohmann::json& doc) {
    if (!doc.is_array()) throw SchemaError("corpus root must be a JSON array");
    std::vector<Conversation> corpus;
    corpus.reserve(doc.size());
    for (size_t i = 0; i < doc.size(); ++i) {
        corpus.push_back(parse_conversation(doc[i], i));
    }
    return corpus;
}

std::vector<Conversation> load_corpus(const std::filesystem::path& path, CorpusFormat) {
    nlohmann::json doc;
    const std::string raw = read_file(path);
    try {
        doc = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("corpus file " + path.string() + ": " + e.what());
    }
    return parse_corpus_json(doc);
}

nlohmann::json corpus_to_json(const std::vector<Conversation>& corpus) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& conv : corpus) {
        nlohmann::json entry;
        entry["conversation_ID"] = conv.id;
        nlohmann::json utts = nlohmann::json::array();
        for (const auto& utt : conv.utterances) {
            nlohmann::json node;
            node["utterance_ID"] = utt.id;
            node["text"] = utt.text;
            node["speaker"] = utt.speaker;
            if (utt.gold_emotion) node["emotion"] = std::string(to_string(*utt.gold_emotion));
            if (utt.video_ref) node["video_name"] = *utt.video_ref;
            if (utt.audio_ref) node["audio_name"] = *utt.audio_ref;
            utts.push_back(std::move(node));
        }
        entry["conversation"] = std::move(utts);
        if (!conv.gold_pairs.empty()) {
            nlohmann::json pairs = nlohmann::json::array();
            for (const auto& pair : conv.gold_pairs) {
                pairs.push_back({std::to_string(pair.emotion_utt_id) + "_" +
                                     std::string(to_string(pair.emotion)),
                                 std::to_string(pair.cause_utt_id)});
            }
            entry["emotion-cause_pairs"] = std::move(pairs);
        }
        doc.push_back(std::move(entry));
    }
    return doc;
}

void save_corpus(const std::vector<Conversation>& corpus, const std::filesystem::path& path) {
    write_file(path, corpus_to_json(corpus).dump(2) + "\n");
}

DatasetStats compute_stats(const std::vector<Conversation>& corpus) {
    DatasetStats stats;
    stats.n_conversations = static_cast<long>(corpus.size());
    for (EmotionLabel label : all_emotion_labels()) stats.emotion_histogram[label] = 0;

    for (const auto& conv : corpus) {
        stats.n_utterances += conv.size();
        for (const auto& utt : conv.utterances) {
            if (!utt.gold_emotion) {
                throw MissingGoldError("conversation " + conv.id + ": utterance " +
                                       std::to_string(utt.id) + " lacks a gold emotion");
            }
            stats.emotion_histogram[*utt.gold_emotion] += 1;
        }
        for (const auto& pair : conv.gold_pairs) {
            stats.relative_position_histogram[pair.cause_utt_id - pair.emotion_utt_id] += 1;
        }
        for (const auto& utt : conv.utterances) {
            if (!is_emotional(*utt.gold_emotion)) continue;
            stats.n_emotional += 1;
            bool hasPair = false, hasSelf = false, hasLater = false;
            for (const auto& pair : conv.gold_pairs) {
                if (pair.emotion_utt_id != utt.id) continue;
                hasPair = true;
                hasSelf |= pair.cause_utt_id == utt.id;
                hasLater |= pair.cause_utt_id > utt.id;
            }
            if (hasSelf) stats.n_self_causal += 1;
            if (hasPair && !hasSelf) stats.n_non_self_causal += 1;
            if (!hasPair) stats.n_no_cause_emotional += 1;
            if (hasLater) stats.n_later_causal += 1;
        }
    }
    return stats;
}

long DatasetStats::total_pair_instances() const {
    long total = 0;
    for (const auto& [offset, count] : relative_position_histogram) total += count;
    return total;
}

double DatasetStats::offset_fraction(int lo, int hi) const {
    const long total = total_pair_instances();
    if (total == 0) return 0.0;
    long inside = 0;
    for (const auto& [offset, count] : relative_position_histogram) {
        if (offset >= lo && offset <= hi) inside += count;
    }
    return static_cast<double>(inside) / static_cast<double>(total);
}

double DatasetStats::later_cause_fraction() const {
    const long total = total_pair_instances();
    if (total == 0) return 0.0;
    long later = 0;
    for (const auto& [offset, count] : relative_position_histogram) {
        if (offset > 0) later += count;
    }
    return static_cast<double>(later) / static_cast<double>(total);
}

nlohmann::json stats_to_json(const DatasetStats& stats) {
    nlohmann::json doc;
    doc["conversations"] = stats.n_conversations;
    doc["utterances"] = stats.n_utterances;
    doc["emotional_utterances"] = stats.n_emotional;
    doc["self_causal_utterances"] = stats.n_self_causal;
    doc["non_self_causal_utterances"] = stats.n_non_self_causal;
    doc["no_cause_emotional_utterances"] = stats.n_no_cause_emotional;
    doc["later_causal_utterances"] = stats.n_later_causal;
    nlohmann::json hist;
    for (const auto& [label, count] : stats.emotion_histogram) {
        hist[std::string(to_string(label))] = count;
    }
    doc["emotion_histogram"] = std::move(hist);
    nlohmann::json positions;
    for (const auto& [offset, count] : stats.relative_position_histogram) {
        positions[std::to_string(offset)] = count;
    }
    doc["relative_position_histogram"] = std::move(positions);
    doc["pair_instances"] = stats.total_pair_instances();
    doc["self_cause_fraction"] = stats.self_cause_fraction();
    doc["later_cause_fraction"] = stats.later_cause_fraction();
    doc["fraction_minus5_to_0"] = stats.offset_fraction(-5, 0);
    return doc;
}

std::string emotion_histogram_csv(const DatasetStats& stats) {
    std::ostringstream out;
    out << "emotion,count\n";
    for (EmotionLabel label : all_emotion_labels()) {
        const auto it = stats.emotion_histogram.find(label);
        out << to_string(label) << "," << (it == stats.emotion_histogram.end() ? 0 : it->second)
            << "\n";
    }
    return out.str();
}

std::string relative_position_csv(const DatasetStats& stats) {
    std::ostringstream out;
    out << "offset,count\n";
    for (const auto& [offset, count] : stats.relative_position_histogram) {
        out << offset << "," << count << "\n";
    }
    return out.str();
}

}  // namespace eca
