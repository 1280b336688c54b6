#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "afec/kgraph.hpp"

namespace afec {

using TokenList = std::vector<std::string>;

/// The project tokenizer, lowercased. All metrics score these tokens.
TokenList metric_tokens(std::string_view text);

inline constexpr double kBleuEpsilon = 1e-9;

// Every reference-based metric scores the hypothesis against each reference
// separately and averages. `flagged`, when given, is set if the convention for
// degenerate input was applied (empty hypothesis, too few tokens).

/// Cumulative sentence BLEU up to `max_n` with uniform weights; zero
/// precisions are replaced by kBleuEpsilon; brevity penalty per reference.
double bleu(const TokenList& hypothesis, const std::vector<TokenList>& references, int max_n, bool* flagged = nullptr);

/// Bigram F1. A pair where either side has fewer than 2 tokens scores 0.
double rouge2_f1(const TokenList& hypothesis, const std::vector<TokenList>& references, bool* flagged = nullptr);

/// Exact-match METEOR: alignment with the most matches and then the fewest
/// chunks; Fmean = 10PR/(R+9P), penalty = 0.5 (chunks/matches)^3.
double meteor(const TokenList& hypothesis, const std::vector<TokenList>& references, bool* flagged = nullptr);

/// Fewest chunks over all maximum exact alignments.
struct Alignment {
    std::size_t matches = 0;
    std::size_t chunks = 0;
};
Alignment align(const TokenList& hypothesis, const TokenList& reference);

/// Distinct n-grams over total n-grams across the whole corpus; 0 with no n-grams.
double distinct_n(const std::vector<TokenList>& hypotheses, int n);

// Text conveniences over metric_tokens.
double bleu(std::string_view hypothesis, const std::vector<std::string>& references, int max_n);
double rouge2_f1(std::string_view hypothesis, const std::vector<std::string>& references);
double meteor(std::string_view hypothesis, const std::vector<std::string>& references);
double distinct_n(const std::vector<std::string>& hypotheses, int n);

struct EvalItem {
    std::string speaker_id;
    std::string speaker_text;
    std::vector<std::string> references;
};

struct MetricReport {
    std::size_t items = 0;
    std::size_t flagged = 0;
    double bleu2 = 0.0;
    double bleu4 = 0.0;
    double rouge2 = 0.0;
    double meteor = 0.0;
    double dist1 = 0.0;
    double dist2 = 0.0;
    double dist3 = 0.0;

    bool operator==(const MetricReport&) const = default;
};

/// replies[i] answers items[i]. Means are summed in item order.
/// Throws std::invalid_argument on a count mismatch, no items, or an item without references.
MetricReport evaluate(const std::vector<std::string>& replies, const std::vector<EvalItem>& items,
                      std::size_t workers = 0);

/// "BLEU-2\t<value>" style lines.
std::string format_report(const MetricReport& report);

struct SplitSpec {
    std::set<std::string> reserved_origins;  // speaker nodes holding any of these origins always go to test
    double fraction = 0.10;
    std::uint64_t seed = 0;
};

/// "fraction=0.1,seed=7,reserved=a|b"; missing keys keep their defaults.
SplitSpec parse_split_spec(std::string_view text);

struct Split {
    std::vector<SpeakerId> train;  // ascending
    std::vector<SpeakerId> test;   // ascending
};

/// Reserved speakers plus max(1, round-half-up(fraction * rest)) drawn
/// uniformly from the rest. Throws std::invalid_argument unless 0 < fraction < 1.
Split make_split(const KnowledgeGraph& graph, const SplitSpec& spec);

/// One item per test speaker with at least one listener; the references are
/// the representatives of its linked listener nodes.
std::vector<EvalItem> test_items(const KnowledgeGraph& graph, const Split& split);

}  // namespace afec
