#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "afec/text.hpp"

namespace afec {

class LineProcess;

struct SentenceScore {
    std::string sentence;
    std::size_t index = 0;
    double score = 0.0;
};

std::vector<std::string> split_sentences(std::string_view text);

/// Frequency score of every sentence, in document order.
std::vector<SentenceScore> score_sentences(std::string_view text);

/// Highest-scoring sentence (earliest on ties). Single-sentence input comes
/// back unchanged. Throws std::invalid_argument on empty text.
std::string summarize_one(std::string_view text);

/// Root part-of-speech of a sentence, as a Universal Dependencies tag
/// (VERB, AUX, NOUN, ADJ, ...).
struct SyntaxAnalysis {
    std::string root_tag;
    std::optional<std::size_t> root_index;  // token index, if the analyzer reports it
};

class SyntaxAnalyzer {
public:
    virtual ~SyntaxAnalyzer() = default;
    virtual std::string name() const = 0;
    virtual std::string version() const = 0;
    /// Must be callable concurrently. Throws AnalysisError on failure.
    virtual SyntaxAnalysis analyze(std::string_view sentence) const = 0;
};

/// Rule-based tagger over closed-class word lists and suffix heuristics.
/// The root is the first finite verb outside subordinate clauses; failing
/// that, any verb; with no verb the root is nominal.
class BaselineAnalyzer final : public SyntaxAnalyzer {
public:
    std::string name() const override { return "baseline"; }
    std::string version() const override { return "1"; }
    SyntaxAnalysis analyze(std::string_view sentence) const override;

    /// Per-token UD tags, exposed for tests and debugging.
    std::vector<std::string> tag(const std::vector<std::string>& tokens) const;
};

/// Talks to a child process: writes one sentence per line, reads
/// "root_pos=<TAG>" per line.
class ExternalAnalyzer final : public SyntaxAnalyzer {
public:
    explicit ExternalAnalyzer(std::string command);
    ~ExternalAnalyzer() override;

    std::string name() const override { return "external:" + command_; }
    std::string version() const override { return "1"; }
    SyntaxAnalysis analyze(std::string_view sentence) const override;

private:
    std::string command_;
    mutable std::mutex mutex_;
    std::unique_ptr<LineProcess> process_;
};

/// "baseline" or "external:<command>".
std::unique_ptr<SyntaxAnalyzer> make_analyzer(std::string_view spec);

/// VERB and AUX both count as verbal roots.
bool is_verbal_tag(std::string_view tag);

/// Throws std::invalid_argument on an empty sentence; analyzer errors propagate.
bool root_is_verb(std::string_view sentence, const SyntaxAnalyzer& analyzer);

enum class SpeakerSource { Title, Body };

struct SpeakerDerivation {
    std::string text;
    SpeakerSource source = SpeakerSource::Title;
};

/// Summarize + root-check the title; if that fails, do the same for the
/// body. Both texts must already be cleaned (either may be empty). The
/// chosen sentence must also pass `validate`.
std::optional<SpeakerDerivation> derive_speaker_utterance(std::string_view title, std::string_view body,
                                                          const SyntaxAnalyzer& analyzer,
                                                          const ValidationOptions& validation = {});

}  // namespace afec
