#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "eca/corpus.hpp"

namespace eca {

/// Counts plus derived ratios; every 0/0 is defined as 0, never NaN.
struct PairScore {
    long tp = 0;
    long fp = 0;
    long fn = 0;

    double precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp); }
    double recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn); }
    double f1() const {
        const double p = precision();
        const double r = recall();
        return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    }
};

struct LabelScore {
    PairScore counts;
    long support = 0;  // gold pair count for the label
};

/// Per-emotion scores and support-weighted means over the six emotional
/// labels (neutral never carries pairs). Labels with zero support are
/// excluded from the weighting.
struct EmotionBreakdown {
    std::map<EmotionLabel, LabelScore> per_label;
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
    double weighted_f1 = 0.0;
};

struct ScoreResult {
    PairScore micro;
    EmotionBreakdown breakdown;
};

using PairsByConversation = std::map<std::string, std::set<EmotionCausePair>>;

PairsByConversation gold_pairs_of(const std::vector<Conversation>& corpus);

/// Exact-triple matching within each conversation; micro counts pool all
/// conversations. The two documents must cover the same conversation ids.
ScoreResult score_pairs(const PairsByConversation& gold, const PairsByConversation& pred);

/// 7x7 confusion grid: rows gold, columns predicted.
struct ConfusionMatrix {
    std::array<std::array<long, kEmotionCount>, kEmotionCount> cells{};

    long& cell(EmotionLabel gold, EmotionLabel pred);
    long cell(EmotionLabel gold, EmotionLabel pred) const;
    long row_sum(EmotionLabel gold) const;
    long col_sum(EmotionLabel pred) const;
    long total() const;
    long support(EmotionLabel gold) const { return row_sum(gold); }
    PairScore class_score(EmotionLabel label) const;
};

/// Utterances keyed by (conversation id, utterance id).
using LabeledUtterances = std::map<std::pair<std::string, UttId>, EmotionLabel>;

ConfusionMatrix confusion(const LabeledUtterances& gold, const LabeledUtterances& pred);

enum class ReportFormat { json, csv, markdown };

std::optional<ReportFormat> parse_report_format(std::string_view text);

/// Deterministic report over whichever sections are present.
std::string render_report(const ScoreResult* scores, const ConfusionMatrix* matrix,
                          const DatasetStats* stats, ReportFormat format);

void emit_report(const ScoreResult* scores, const ConfusionMatrix* matrix,
                 const DatasetStats* stats, ReportFormat format,
                 const std::filesystem::path& path);

}  // namespace eca
