#include "eca/prediction_document.hpp"

#include "eca/errors.hpp"
#include "eca/util.hpp"

namespace eca {

nlohmann::json PredictionDocument::to_json() const {
    nlohmann::json doc;
    nlohmann::json prov;
    prov["approach"] = provenance.approach;
    prov["use_video_captions"] = provenance.use_video_captions;
    prov["add_self_causes"] = provenance.add_self_causes;
    prov["use_gold_emotions"] = provenance.use_gold_emotions;
    prov["template_versions"] = provenance.template_versions;
    prov["cassette_digest"] = provenance.cassette_digest;
    prov["backend"] = provenance.backend;
    doc["provenance"] = std::move(prov);

    nlohmann::json convs = nlohmann::json::array();
    for (const auto& conv : conversations) {
        nlohmann::json node;
        node["conversation_ID"] = conv.conversation_id;
        nlohmann::json emotions = nlohmann::json::object();
        for (const auto& [id, label] : conv.emotions) {
            emotions[std::to_string(id)] = std::string(to_string(label));
        }
        node["emotions"] = std::move(emotions);
        nlohmann::json pairs = nlohmann::json::array();
        for (const auto& pair : conv.pairs) {
            pairs.push_back({std::to_string(pair.emotion_utt_id) + "_" +
                                 std::string(to_string(pair.emotion)),
                             std::to_string(pair.cause_utt_id)});
        }
        node["pairs"] = std::move(pairs);
        convs.push_back(std::move(node));
    }
    doc["conversations"] = std::move(convs);
    return doc;
}

PredictionDocument PredictionDocument::from_json(const nlohmann::json& doc) {
    PredictionDocument document;
    if (doc.contains("provenance")) {
        const auto& prov = doc.at("provenance");
        document.provenance.approach = prov.value("approach", "");
        document.provenance.use_video_captions = prov.value("use_video_captions", false);
        document.provenance.add_self_causes = prov.value("add_self_causes", false);
        document.provenance.use_gold_emotions = prov.value("use_gold_emotions", false);
        document.provenance.cassette_digest = prov.value("cassette_digest", "");
        document.provenance.backend = prov.value("backend", "");
        if (prov.contains("template_versions")) {
            for (const auto& [name, digest] : prov.at("template_versions").items()) {
                document.provenance.template_versions[name] = digest.get<std::string>();
            }
        }
    }
    if (!doc.contains("conversations") || !doc.at("conversations").is_array()) {
        throw SchemaError("prediction document lacks a conversations array");
    }
    for (const auto& node : doc.at("conversations")) {
        ConversationPrediction conv;
        if (!node.contains("conversation_ID")) {
            throw SchemaError("prediction entry lacks conversation_ID");
        }
        const auto& id = node.at("conversation_ID");
        conv.conversation_id =
            id.is_string() ? id.get<std::string>() : std::to_string(id.get<long>());
        if (node.contains("emotions")) {
            for (const auto& [key, value] : node.at("emotions").items()) {
                UttId uttId = 0;
                try {
                    uttId = std::stoi(key);
                } catch (const std::exception&) {
                    throw SchemaError("prediction emotions key '" + key + "' is not an integer");
                }
                const auto label = parse_emotion_label(value.get<std::string>());
                if (!label) {
                    throw SchemaError("prediction emotion '" + value.get<std::string>() +
                                      "' unknown");
                }
                conv.emotions[uttId] = *label;
            }
        }
        if (node.contains("pairs")) {
            for (const auto& pairNode : node.at("pairs")) {
                if (!pairNode.is_array() || pairNode.size() != 2) {
                    throw SchemaError("prediction pair must be a 2-element array");
                }
                const std::string emoToken = pairNode[0].get<std::string>();
                const std::string causeToken = pairNode[1].get<std::string>();
                const auto sep = emoToken.find('_');
                if (sep == std::string::npos) {
                    throw SchemaError("prediction pair token '" + emoToken + "' malformed");
                }
                EmotionCausePair pair;
                try {
                    pair.emotion_utt_id = std::stoi(emoToken.substr(0, sep));
                    pair.cause_utt_id = std::stoi(causeToken);
                } catch (const std::exception&) {
                    throw SchemaError("prediction pair ids malformed");
                }
                const auto label = parse_emotion_label(emoToken.substr(sep + 1));
                if (!label) {
                    throw SchemaError("prediction pair emotion '" + emoToken + "' unknown");
                }
                pair.emotion = *label;
                conv.pairs.insert(pair);
            }
        }
        document.conversations.push_back(std::move(conv));
    }
    return document;
}

void PredictionDocument::save(const std::filesystem::path& path) const {
    write_file(path, to_json().dump(2) + "\n");
}

PredictionDocument PredictionDocument::load(const std::filesystem::path& path) {
    try {
        return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("prediction document " + path.string() + ": " + e.what());
    }
}

PairsByConversation pairs_of(const PredictionDocument& document) {
    PairsByConversation pairs;
    for (const auto& conv : document.conversations) {
        pairs[conv.conversation_id] = conv.pairs;
    }
    return pairs;
}

LabeledUtterances emotions_of(const PredictionDocument& document) {
    LabeledUtterances labels;
    for (const auto& conv : document.conversations) {
        for (const auto& [id, label] : conv.emotions) {
            labels[{conv.conversation_id, id}] = label;
        }
    }
    return labels;
}

LabeledUtterances gold_emotions_of(const std::vector<Conversation>& corpus) {
    LabeledUtterances labels;
    for (const auto& conv : corpus) {
        for (const auto& utt : conv.utterances) {
            if (!utt.gold_emotion) {
                throw MissingGoldError("conversation " + conv.id + ": utterance " +
                                       std::to_string(utt.id) + " lacks a gold emotion");
            }
            labels[{conv.id, utt.id}] = *utt.gold_emotion;
        }
    }
    return labels;
}

std::vector<ValidationFinding> validate_predictions(const std::vector<Conversation>& corpus,
                                                    const PredictionDocument& document) {
    std::map<std::string, const Conversation*> byId;
    for (const auto& conv : corpus) byId[conv.id] = &conv;

    std::vector<ValidationFinding> findings;
    std::set<std::string> seen;
    for (const auto& conv : document.conversations) {
        if (!seen.insert(conv.conversation_id).second) {
            findings.push_back({conv.conversation_id, "duplicate conversation entry"});
            continue;
        }
        const auto it = byId.find(conv.conversation_id);
        if (it == byId.end()) {
            findings.push_back({conv.conversation_id, "unknown conversation id"});
            continue;
        }
        const int size = it->second->size();
        for (const auto& [id, label] : conv.emotions) {
            if (id < 1 || id > size) {
                findings.push_back({conv.conversation_id,
                                    "emotion label for out-of-range utterance " +
                                        std::to_string(id) + " (conversation has " +
                                        std::to_string(size) + ")"});
            }
        }
        for (const auto& pair : conv.pairs) {
            if (pair.emotion_utt_id < 1 || pair.emotion_utt_id > size) {
                findings.push_back({conv.conversation_id,
                                    "pair references out-of-range emotion utterance " +
                                        std::to_string(pair.emotion_utt_id)});
            }
            if (pair.cause_utt_id < 1 || pair.cause_utt_id > size) {
                findings.push_back({conv.conversation_id,
                                    "pair references out-of-range cause utterance " +
                                        std::to_string(pair.cause_utt_id)});
            }
            if (!is_emotional(pair.emotion)) {
                findings.push_back({conv.conversation_id,
                                    "pair for utterance " + std::to_string(pair.emotion_utt_id) +
                                        " carries a neutral emotion"});
            }
            const auto labelIt = conv.emotions.find(pair.emotion_utt_id);
            if (labelIt != conv.emotions.end() && labelIt->second != pair.emotion) {
                findings.push_back(
                    {conv.conversation_id,
                     "pair labels utterance " + std::to_string(pair.emotion_utt_id) + " as " +
                         std::string(to_string(pair.emotion)) + " but it is predicted " +
                         std::string(to_string(labelIt->second))});
            }
        }
    }
    return findings;
}

}  // namespace eca
