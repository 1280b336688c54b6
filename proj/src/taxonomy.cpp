#include "afec/taxonomy.hpp"

#include <algorithm>

namespace afec {

namespace {

constexpr std::array<std::string_view, kLabelCount> kNames{
    "prepared",     "anticipating", "hopeful",     "proud",        "excited",      "joyful",    "content",
    "caring",       "grateful",     "trusting",    "confident",    "faithful",     "impressed", "surprised",
    "terrified",    "afraid",       "apprehensive", "anxious",     "embarrassed",  "ashamed",   "devastated",
    "sad",          "disappointed", "lonely",      "sentimental",  "nostalgic",    "guilty",    "disgusted",
    "furious",      "angry",        "annoyed",     "jealous",      "agreeing",     "acknowledging",
    "encouraging",  "consoling",    "sympathizing", "suggesting",  "questioning",  "wishing",   "neutral"};

std::array<Label, kLabelCount> make_all() {
    std::array<Label, kLabelCount> out{};
    for (std::size_t i = 0; i < kLabelCount; ++i) out[i] = static_cast<Label>(i);
    return out;
}

const std::array<Label, kLabelCount> kAll = make_all();

using enum Label;
const std::array<std::vector<Label>, kSimilarityGroupCount> kGroups{{
    {Prepared, Confident, Proud},
    {Content, Hopeful, Anticipating},
    {Joyful, Excited},
    {Caring},
    {Faithful, Trusting, Grateful},
    {Jealous, Annoyed, Angry, Furious},
    {Terrified, Afraid, Anxious, Apprehensive},
    {Disgusted},
    {Ashamed, Guilty, Embarrassed},
    {Devastated, Sad, Disappointed, Nostalgic, Lonely},
    {Surprised},
    {Impressed},
    {Sentimental},
    {Neutral},
    {Agreeing, Acknowledging},
    {Encouraging},
    {Consoling, Sympathizing},
    {Suggesting},
    {Questioning},
    {Wishing},
}};

std::array<int, kLabelCount> make_group_index() {
    std::array<int, kLabelCount> out{};
    for (std::size_t g = 0; g < kGroups.size(); ++g)
        for (Label l : kGroups[g]) out[label_index(l)] = static_cast<int>(g + 1);
    return out;
}

const std::array<int, kLabelCount> kGroupOf = make_group_index();

}  // namespace

std::span<const Label> all_labels() { return kAll; }

std::string_view label_name(Label label) { return kNames[label_index(label)]; }

std::optional<Label> parse_label(std::string_view name) {
    auto it = std::find(kNames.begin(), kNames.end(), name);
    if (it == kNames.end()) return std::nullopt;
    return static_cast<Label>(it - kNames.begin());
}

LabelClass label_class(Label label) {
    return label_index(label) < kEmotionCount ? LabelClass::Emotion : LabelClass::Intent;
}

int similarity_group(Label label) { return kGroupOf[label_index(label)]; }

const std::array<std::vector<Label>, kSimilarityGroupCount>& similarity_groups() { return kGroups; }

bool is_similar(Label a, Label b) { return similarity_group(a) == similarity_group(b); }

bool is_empathetic_intent(Label label) {
    return label_class(label) == LabelClass::Intent && label != Label::Neutral;
}

}  // namespace afec
