#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "afec/kgraph.hpp"
#include "afec/taxonomy.hpp"

namespace afec {

class LineProcess;

inline constexpr double kDefaultDecay = 0.6;

/// Tokens of the primary text (weight 1) followed by context tokens whose
/// weights decay as gamma^(i+1).
struct WeightedInput {
    std::vector<std::string> tokens;
    std::vector<double> weights;
    std::size_t primary_count = 0;

    bool operator==(const WeightedInput&) const = default;
};

/// Throws std::invalid_argument on an empty primary text or gamma outside (0, 1).
WeightedInput build_weighted_input(std::string_view primary, std::optional<std::string_view> context = std::nullopt,
                                   double gamma = kDefaultDecay);

class EmotionClassifier {
public:
    virtual ~EmotionClassifier() = default;
    virtual std::string name() const = 0;
    virtual std::string version() const = 0;
    /// Deterministic for a given version. Throws ClassificationError on backend failure.
    virtual Label classify(const WeightedInput& input) const = 0;
    virtual std::size_t max_concurrency() const { return 1; }

    std::string describe() const { return name() + "/" + version(); }
};

/// Weighted keyword lexicon: each label scores the sum of keyword weight
/// times token weight over its matches; the best score wins, ties going to
/// the label listed first in the taxonomy. With no match the result is
/// neutral, or questioning when the primary text ends in '?'.
class LexiconClassifier final : public EmotionClassifier {
public:
    struct Keyword {
        std::vector<std::string> tokens;
        double weight = 1.0;
    };

    /// The lexicon compiled into the binary.
    static const LexiconClassifier& bundled();
    /// Lines of "label<TAB>keyword[:weight]...", '#' comments. Throws
    /// std::invalid_argument on unknown labels or bad weights.
    static LexiconClassifier parse(std::istream& in, std::string version = "1");
    static LexiconClassifier from_file(const std::filesystem::path& path);

    std::string name() const override { return "lexicon"; }
    std::string version() const override { return version_; }
    Label classify(const WeightedInput& input) const override;
    std::size_t max_concurrency() const override;

    std::array<double, kLabelCount> scores(const WeightedInput& input) const;
    const std::vector<Keyword>& keywords(Label label) const { return keywords_[label_index(label)]; }

private:
    std::array<std::vector<Keyword>, kLabelCount> keywords_;
    std::string version_;
};

/// Child process protocol: one JSON object {"tokens": [...], "weights": [...]}
/// per line in, one label name per line out.
class ExternalClassifier final : public EmotionClassifier {
public:
    explicit ExternalClassifier(std::string command);
    ~ExternalClassifier() override;

    std::string name() const override { return "external:" + command_; }
    std::string version() const override { return "1"; }
    Label classify(const WeightedInput& input) const override;

private:
    std::string command_;
    mutable std::mutex mutex_;
    std::unique_ptr<LineProcess> process_;
};

/// "baseline" (alias "lexicon"), "lexicon:<path>" or "external:<command>".
std::unique_ptr<EmotionClassifier> make_classifier(std::string_view spec);

struct LabelOptions {
    double gamma = kDefaultDecay;
    std::size_t workers = 0;  // 0 = hardware concurrency, capped by the classifier
};

/// Speakers are classified from their representative alone; listeners from
/// their representative followed by the representative of the linked speaker
/// with the highest support (lowest id on ties), or alone when unlinked.
/// Records the classifier in the manifest. Errors carry the node id.
void label_graph(KnowledgeGraph& graph, const EmotionClassifier& classifier, const LabelOptions& options = {});

struct LabelDistribution {
    Role side = Role::Speaker;
    std::size_t total = 0;
    std::array<std::size_t, kLabelCount> counts{};
    std::array<double, kLabelCount> fractions{};

    bool empty() const noexcept { return total == 0; }
};

/// Throws StateError if any node on `side` is unlabeled.
LabelDistribution label_distribution(const KnowledgeGraph& graph, Role side);
/// Taxonomy order, one "label<TAB>class<TAB>count<TAB>fraction" line per label.
std::string format_distribution(const LabelDistribution& dist);

}  // namespace afec
