#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "eca/corpus.hpp"

namespace eca {

/// Placement of the target utterance within its conversation. Selects the
/// context-window bounds and, together with the emotion, a cause index.
enum class PositionClass { beginning, middle, end };

std::string_view to_string(PositionClass position);
std::optional<PositionClass> parse_position_class(std::string_view text);

/// Contiguous utterance span around a target. Members keep their original
/// conversation ids; no renumbering.
struct ContextWindow {
    std::string conversation_id;
    UttId target_utt_id = 0;
    UttId first_utt_id = 0;
    UttId last_utt_id = 0;
    PositionClass position = PositionClass::middle;

    int length() const { return last_utt_id - first_utt_id + 1; }
    bool contains(UttId id) const { return id >= first_utt_id && id <= last_utt_id; }
};

/// beginning iff the target is utterance 1 (single-utterance conversations
/// included), end iff it is the last of a longer conversation, middle otherwise.
PositionClass classify_position(UttId target_utt_id, int conversation_length);

/// Window bounds per position class: beginning 0 back / 2 forward,
/// end 5 back / 0 forward, middle 5 back / 2 forward, clamped to 1..M.
ContextWindow extract_window(const std::string& conversation_id, UttId target_utt_id,
                             int conversation_length);
ContextWindow extract_window(const Conversation& conversation, UttId target_utt_id);

}  // namespace eca
