#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace afec {

// 32 emotions, 8 empathetic response intents, and neutral, in taxonomy order.
enum class Label : std::uint8_t {
    Prepared, Anticipating, Hopeful, Proud, Excited, Joyful, Content, Caring,
    Grateful, Trusting, Confident, Faithful, Impressed, Surprised, Terrified, Afraid,
    Apprehensive, Anxious, Embarrassed, Ashamed, Devastated, Sad, Disappointed, Lonely,
    Sentimental, Nostalgic, Guilty, Disgusted, Furious, Angry, Annoyed, Jealous,
    Agreeing, Acknowledging, Encouraging, Consoling, Sympathizing, Suggesting, Questioning, Wishing,
    Neutral,
};

inline constexpr std::size_t kLabelCount = 41;
inline constexpr std::size_t kEmotionCount = 32;
inline constexpr std::size_t kSimilarityGroupCount = 20;

enum class LabelClass { Emotion, Intent };

std::span<const Label> all_labels();
std::string_view label_name(Label label);
std::optional<Label> parse_label(std::string_view name);
constexpr std::size_t label_index(Label label) { return static_cast<std::size_t>(label); }

/// Neutral sits with the intents, as in the taxonomy table.
LabelClass label_class(Label label);

/// Group number 1..20 of the similar-emotion table.
int similarity_group(Label label);
const std::array<std::vector<Label>, kSimilarityGroupCount>& similarity_groups();

bool is_similar(Label a, Label b);

/// One of the 8 empathetic response intents (neutral excluded).
bool is_empathetic_intent(Label label);

}  // namespace afec
