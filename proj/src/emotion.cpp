#include "eca/emotion.hpp"

#include "eca/util.hpp"

namespace eca {

std::string_view to_string(EmotionLabel label) {
    switch (label) {
        case EmotionLabel::anger: return "anger";
        case EmotionLabel::disgust: return "disgust";
        case EmotionLabel::fear: return "fear";
        case EmotionLabel::joy: return "joy";
        case EmotionLabel::sadness: return "sadness";
        case EmotionLabel::surprise: return "surprise";
        case EmotionLabel::neutral: return "neutral";
    }
    return "neutral";
}

std::optional<EmotionLabel> parse_emotion_label(std::string_view text) {
    const std::string lowered = to_lower(trim(text));
    for (EmotionLabel label : all_emotion_labels()) {
        if (lowered == to_string(label)) return label;
    }
    return std::nullopt;
}

}  // namespace eca
