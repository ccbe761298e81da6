#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace eca {

/// The seven emotion categories. All but neutral count as "emotional".
enum class EmotionLabel { anger, disgust, fear, joy, sadness, surprise, neutral };

inline constexpr int kEmotionCount = 7;

constexpr std::array<EmotionLabel, 7> all_emotion_labels() {
    return {EmotionLabel::anger,   EmotionLabel::disgust, EmotionLabel::fear,
            EmotionLabel::joy,     EmotionLabel::sadness, EmotionLabel::surprise,
            EmotionLabel::neutral};
}

constexpr std::array<EmotionLabel, 6> emotional_labels() {
    return {EmotionLabel::anger, EmotionLabel::disgust,  EmotionLabel::fear,
            EmotionLabel::joy,   EmotionLabel::sadness, EmotionLabel::surprise};
}

constexpr bool is_emotional(EmotionLabel label) { return label != EmotionLabel::neutral; }

constexpr int label_index(EmotionLabel label) { return static_cast<int>(label); }

/// Canonical lowercase name.
std::string_view to_string(EmotionLabel label);

/// Case-insensitive parse of a (trimmed) label name; nullopt when unknown.
std::optional<EmotionLabel> parse_emotion_label(std::string_view text);

}  // namespace eca
