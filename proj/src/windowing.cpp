#include "eca/windowing.hpp"

#include <algorithm>

#include "eca/errors.hpp"

namespace eca {

std::string_view to_string(PositionClass position) {
    switch (position) {
        case PositionClass::beginning: return "beginning";
        case PositionClass::middle: return "middle";
        case PositionClass::end: return "end";
    }
    return "middle";
}

std::optional<PositionClass> parse_position_class(std::string_view text) {
    if (text == "beginning") return PositionClass::beginning;
    if (text == "middle") return PositionClass::middle;
    if (text == "end") return PositionClass::end;
    return std::nullopt;
}

namespace {

void check_range(UttId target, int length) {
    if (length < 1) throw RangeError("conversation length must be positive");
    if (target < 1 || target > length) {
        throw RangeError("target utterance " + std::to_string(target) + " out of range 1.." +
                         std::to_string(length));
    }
}

struct Bounds {
    int previous;
    int next;
};

constexpr Bounds bounds_for(PositionClass position) {
    switch (position) {
        case PositionClass::beginning: return {0, 2};
        case PositionClass::end: return {5, 0};
        case PositionClass::middle: return {5, 2};
    }
    return {5, 2};
}

}  // namespace

PositionClass classify_position(UttId target_utt_id, int conversation_length) {
    check_range(target_utt_id, conversation_length);
    if (target_utt_id == 1) return PositionClass::beginning;
    if (target_utt_id == conversation_length) return PositionClass::end;
    return PositionClass::middle;
}

ContextWindow extract_window(const std::string& conversation_id, UttId target_utt_id,
                             int conversation_length) {
    const PositionClass position = classify_position(target_utt_id, conversation_length);
    const Bounds bounds = bounds_for(position);
    ContextWindow window;
    window.conversation_id = conversation_id;
    window.target_utt_id = target_utt_id;
    window.first_utt_id = std::max(1, target_utt_id - bounds.previous);
    window.last_utt_id = std::min(conversation_length, target_utt_id + bounds.next);
    window.position = position;
    return window;
}

ContextWindow extract_window(const Conversation& conversation, UttId target_utt_id) {
    return extract_window(conversation.id, target_utt_id, conversation.size());
}

}  // namespace eca
