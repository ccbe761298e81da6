#include "eca/evaluation.hpp"

#include <sstream>

#include "eca/errors.hpp"
#include "eca/util.hpp"

namespace eca {

PairsByConversation gold_pairs_of(const std::vector<Conversation>& corpus) {
    PairsByConversation gold;
    for (const auto& conv : corpus) gold[conv.id] = conv.gold_pairs;
    return gold;
}

ScoreResult score_pairs(const PairsByConversation& gold, const PairsByConversation& pred) {
    for (const auto& [id, pairs] : gold) {
        if (!pred.count(id)) {
            throw ConversationMismatchError("predictions missing conversation '" + id + "'");
        }
    }
    for (const auto& [id, pairs] : pred) {
        if (!gold.count(id)) {
            throw ConversationMismatchError("predictions reference unknown conversation '" + id +
                                            "'");
        }
    }

    ScoreResult result;
    for (EmotionLabel label : emotional_labels()) result.breakdown.per_label[label] = {};

    for (const auto& [id, goldPairs] : gold) {
        const auto& predPairs = pred.at(id);
        for (const auto& pair : predPairs) {
            auto& label = result.breakdown.per_label[pair.emotion];
            if (goldPairs.count(pair)) {
                result.micro.tp += 1;
                label.counts.tp += 1;
            } else {
                result.micro.fp += 1;
                label.counts.fp += 1;
            }
        }
        for (const auto& pair : goldPairs) {
            auto& label = result.breakdown.per_label[pair.emotion];
            label.support += 1;
            if (!predPairs.count(pair)) {
                result.micro.fn += 1;
                label.counts.fn += 1;
            }
        }
    }

    long totalSupport = 0;
    for (const auto& [label, score] : result.breakdown.per_label) totalSupport += score.support;
    if (totalSupport > 0) {
        for (const auto& [label, score] : result.breakdown.per_label) {
            if (score.support == 0) continue;
            const double weight =
                static_cast<double>(score.support) / static_cast<double>(totalSupport);
            result.breakdown.weighted_precision += weight * score.counts.precision();
            result.breakdown.weighted_recall += weight * score.counts.recall();
            result.breakdown.weighted_f1 += weight * score.counts.f1();
        }
    }
    return result;
}

long& ConfusionMatrix::cell(EmotionLabel gold, EmotionLabel pred) {
    return cells[static_cast<size_t>(label_index(gold))][static_cast<size_t>(label_index(pred))];
}

long ConfusionMatrix::cell(EmotionLabel gold, EmotionLabel pred) const {
    return cells[static_cast<size_t>(label_index(gold))][static_cast<size_t>(label_index(pred))];
}

long ConfusionMatrix::row_sum(EmotionLabel gold) const {
    long sum = 0;
    for (EmotionLabel pred : all_emotion_labels()) sum += cell(gold, pred);
    return sum;
}

long ConfusionMatrix::col_sum(EmotionLabel pred) const {
    long sum = 0;
    for (EmotionLabel gold : all_emotion_labels()) sum += cell(gold, pred);
    return sum;
}

long ConfusionMatrix::total() const {
    long sum = 0;
    for (EmotionLabel gold : all_emotion_labels()) sum += row_sum(gold);
    return sum;
}

PairScore ConfusionMatrix::class_score(EmotionLabel label) const {
    PairScore score;
    score.tp = cell(label, label);
    score.fp = col_sum(label) - score.tp;
    score.fn = row_sum(label) - score.tp;
    return score;
}

ConfusionMatrix confusion(const LabeledUtterances& gold, const LabeledUtterances& pred) {
    if (gold.size() != pred.size()) {
        throw KeyMismatchError("gold and predicted utterance sets differ in size (" +
                               std::to_string(gold.size()) + " vs " + std::to_string(pred.size()) +
                               ")");
    }
    ConfusionMatrix matrix;
    for (const auto& [key, goldLabel] : gold) {
        const auto it = pred.find(key);
        if (it == pred.end()) {
            throw KeyMismatchError("no prediction for utterance " + key.first + ":" +
                                   std::to_string(key.second));
        }
        matrix.cell(goldLabel, it->second) += 1;
    }
    return matrix;
}

std::optional<ReportFormat> parse_report_format(std::string_view text) {
    if (text == "json") return ReportFormat::json;
    if (text == "csv") return ReportFormat::csv;
    if (text == "markdown") return ReportFormat::markdown;
    return std::nullopt;
}

namespace {

nlohmann::json score_to_json(const PairScore& score) {
    return {{"tp", score.tp},
            {"fp", score.fp},
            {"fn", score.fn},
            {"precision", score.precision()},
            {"recall", score.recall()},
            {"f1", score.f1()}};
}

nlohmann::json report_json(const ScoreResult* scores, const ConfusionMatrix* matrix,
                           const DatasetStats* stats) {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["pair_matching"] = "exact (emotion_utt_id, emotion, cause_utt_id) triple per conversation";
    if (scores) {
        nlohmann::json section;
        section["micro"] = score_to_json(scores->micro);
        nlohmann::json perLabel;
        for (const auto& [label, labelScore] : scores->breakdown.per_label) {
            nlohmann::json node = score_to_json(labelScore.counts);
            node["support"] = labelScore.support;
            perLabel[std::string(to_string(label))] = std::move(node);
        }
        section["per_emotion"] = std::move(perLabel);
        section["weighted"] = {{"precision", scores->breakdown.weighted_precision},
                               {"recall", scores->breakdown.weighted_recall},
                               {"f1", scores->breakdown.weighted_f1}};
        doc["pair_scores"] = std::move(section);
    }
    if (matrix) {
        nlohmann::json section;
        nlohmann::json rows;
        for (EmotionLabel gold : all_emotion_labels()) {
            nlohmann::json row;
            for (EmotionLabel pred : all_emotion_labels()) {
                row[std::string(to_string(pred))] = matrix->cell(gold, pred);
            }
            rows[std::string(to_string(gold))] = std::move(row);
        }
        section["cells"] = std::move(rows);
        nlohmann::json perClass;
        for (EmotionLabel label : all_emotion_labels()) {
            nlohmann::json node = score_to_json(matrix->class_score(label));
            node["support"] = matrix->support(label);
            perClass[std::string(to_string(label))] = std::move(node);
        }
        section["per_class"] = std::move(perClass);
        section["total"] = matrix->total();
        doc["confusion"] = std::move(section);
    }
    if (stats) doc["dataset_stats"] = stats_to_json(*stats);
    return doc;
}

std::string report_csv(const ScoreResult* scores, const ConfusionMatrix* matrix,
                       const DatasetStats* stats) {
    std::ostringstream out;
    if (scores) {
        out << "section,label,tp,fp,fn,precision,recall,f1,support\n";
        for (const auto& [label, labelScore] : scores->breakdown.per_label) {
            out << "pairs," << to_string(label) << "," << labelScore.counts.tp << ","
                << labelScore.counts.fp << "," << labelScore.counts.fn << ","
                << format_fixed(labelScore.counts.precision(), 4) << ","
                << format_fixed(labelScore.counts.recall(), 4) << ","
                << format_fixed(labelScore.counts.f1(), 4) << "," << labelScore.support << "\n";
        }
        out << "pairs,micro," << scores->micro.tp << "," << scores->micro.fp << ","
            << scores->micro.fn << "," << format_fixed(scores->micro.precision(), 4) << ","
            << format_fixed(scores->micro.recall(), 4) << ","
            << format_fixed(scores->micro.f1(), 4) << ",\n";
        out << "pairs,weighted,,,," << format_fixed(scores->breakdown.weighted_precision, 4)
            << "," << format_fixed(scores->breakdown.weighted_recall, 4) << ","
            << format_fixed(scores->breakdown.weighted_f1, 4) << ",\n";
    }
    if (matrix) {
        out << "confusion,gold";
        for (EmotionLabel pred : all_emotion_labels()) out << "," << to_string(pred);
        out << "\n";
        for (EmotionLabel gold : all_emotion_labels()) {
            out << "confusion," << to_string(gold);
            for (EmotionLabel pred : all_emotion_labels()) out << "," << matrix->cell(gold, pred);
            out << "\n";
        }
    }
    if (stats) {
        out << "stats,conversations," << stats->n_conversations << "\n";
        out << "stats,utterances," << stats->n_utterances << "\n";
        out << "stats,emotional," << stats->n_emotional << "\n";
    }
    return out.str();
}

std::string report_markdown(const ScoreResult* scores, const ConfusionMatrix* matrix,
                            const DatasetStats* stats) {
    std::ostringstream out;
    out << "# Evaluation report\n\n";
    out << "Pair matching: exact (emotion utterance, emotion, cause utterance) triple per "
           "conversation; 0/0 ratios are 0.\n";
    if (scores) {
        out << "\n## Pair extraction\n\n";
        out << "| label | P | R | F1 | support |\n|---|---|---|---|---|\n";
        for (const auto& [label, labelScore] : scores->breakdown.per_label) {
            out << "| " << to_string(label) << " | "
                << format_fixed(labelScore.counts.precision(), 4) << " | "
                << format_fixed(labelScore.counts.recall(), 4) << " | "
                << format_fixed(labelScore.counts.f1(), 4) << " | " << labelScore.support
                << " |\n";
        }
        out << "| micro | " << format_fixed(scores->micro.precision(), 4) << " | "
            << format_fixed(scores->micro.recall(), 4) << " | "
            << format_fixed(scores->micro.f1(), 4) << " | |\n";
        out << "| weighted | " << format_fixed(scores->breakdown.weighted_precision, 4) << " | "
            << format_fixed(scores->breakdown.weighted_recall, 4) << " | "
            << format_fixed(scores->breakdown.weighted_f1, 4) << " | |\n";
    }
    if (matrix) {
        out << "\n## Emotion recognition\n\n";
        out << "| gold \\ pred |";
        for (EmotionLabel pred : all_emotion_labels()) out << " " << to_string(pred) << " |";
        out << "\n|---|";
        for (int i = 0; i < kEmotionCount; ++i) out << "---|";
        out << "\n";
        for (EmotionLabel gold : all_emotion_labels()) {
            out << "| " << to_string(gold) << " |";
            for (EmotionLabel pred : all_emotion_labels()) {
                out << " " << matrix->cell(gold, pred) << " |";
            }
            out << "\n";
        }
        out << "\n| label | P | R | F1 | support |\n|---|---|---|---|---|\n";
        for (EmotionLabel label : all_emotion_labels()) {
            const PairScore cls = matrix->class_score(label);
            out << "| " << to_string(label) << " | " << format_fixed(cls.precision(), 4) << " | "
                << format_fixed(cls.recall(), 4) << " | " << format_fixed(cls.f1(), 4) << " | "
                << matrix->support(label) << " |\n";
        }
    }
    if (stats) {
        out << "\n## Dataset statistics\n\n";
        out << "- conversations: " << stats->n_conversations << "\n";
        out << "- utterances: " << stats->n_utterances << "\n";
        out << "- emotional utterances: " << stats->n_emotional << "\n";
        out << "- self-causal: " << stats->n_self_causal << "\n";
        out << "- non-self-causal: " << stats->n_non_self_causal << "\n";
        out << "- no-cause emotional: " << stats->n_no_cause_emotional << "\n";
        out << "- later-causal: " << stats->n_later_causal << "\n";
    }
    return out.str();
}

}  // namespace

std::string render_report(const ScoreResult* scores, const ConfusionMatrix* matrix,
                          const DatasetStats* stats, ReportFormat format) {
    switch (format) {
        case ReportFormat::json: return report_json(scores, matrix, stats).dump(2) + "\n";
        case ReportFormat::csv: return report_csv(scores, matrix, stats);
        case ReportFormat::markdown: return report_markdown(scores, matrix, stats);
    }
    return "";
}

void emit_report(const ScoreResult* scores, const ConfusionMatrix* matrix,
                 const DatasetStats* stats, ReportFormat format,
                 const std::filesystem::path& path) {
    write_file(path, render_report(scores, matrix, stats, format));
}

}  // namespace eca
