#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "afec/embedding.hpp"
#include "afec/kgraph.hpp"
#include "afec/labeling.hpp"

namespace afec {

/// Speaker node vectors searched by the chatbot, ids ascending.
struct RetrievalIndex {
    EncoderBinding encoder;
    VectorMatrix vectors;
    std::vector<double> norms;  // per row
    // Optional int8 copy with one scale per row. When present, scans bound
    // every row from the codes and rescore only rows that can still win.
    std::vector<std::int8_t> codes;
    std::vector<float> scales;

    std::size_t size() const noexcept { return vectors.size(); }
};

/// Norms plus the int8 prefilter codes.
RetrievalIndex make_index(EncoderBinding encoder, VectorMatrix vectors);

/// Uses the vectors stored on the graph, or encodes representatives when the
/// graph carries none. Throws IndexError when the encoder differs from the
/// one named in the manifest or when no speaker node is left.
RetrievalIndex build_index(const KnowledgeGraph& graph, const Encoder& encoder,
                           const std::set<std::string>& exclude_ids = {});

struct SpeakerMatch {
    SpeakerId id;
    double similarity = 0.0;

    bool operator==(const SpeakerMatch&) const = default;
};

/// Exact argmax of cosine similarity over the index; ties go to the lowest id.
SpeakerMatch nearest_speaker(const RetrievalIndex& index, const EmbeddingVector& query, std::size_t workers = 0);
/// Throws std::invalid_argument on blank input.
SpeakerMatch nearest_speaker(const RetrievalIndex& index, const Encoder& encoder, std::string_view text,
                             std::size_t workers = 0);

/// The k best matches, similarity descending then id ascending.
std::vector<SpeakerMatch> search(const RetrievalIndex& index, const EmbeddingVector& query, std::size_t k,
                                 std::size_t workers = 0);

enum class Strategy { Random, HighestDegree, FollowEmotion, EmpatheticIntent };

std::span<const Strategy> all_strategies();
/// Short names: rand, hd, follow, intent.
std::string_view strategy_name(Strategy strategy);
/// Accepts the short names and random, highest_degree, follow_emotion, empathetic_intent.
Strategy parse_strategy(std::string_view name);

/// Neighbors eligible under `strategy`, ascending id. When the strategy's
/// filter keeps nothing the pool falls back to every neighbor and
/// `*fallback` is set. Throws NoReplyError when the node has no neighbors.
std::vector<const ListenerNode*> candidate_pool(const KnowledgeGraph& graph, const SpeakerId& speaker,
                                                Strategy strategy, std::optional<Label> input_label,
                                                bool* fallback = nullptr);

struct ReplyOptions {
    bool sample_member = false;  // speak a uniformly drawn member utterance instead of the representative
};

struct Reply {
    std::string text;
    ListenerId listener;
    SpeakerId speaker;
    double similarity = 0.0;
    Strategy strategy = Strategy::Random;
    std::optional<Label> reply_label;
    std::optional<Label> input_label;
    std::uint64_t seed = 0;
    std::size_t candidates = 0;
    bool fallback = false;

    bool operator==(const Reply&) const = default;
};

/// Uniform choice from candidate_pool, drawn from Rng(seed).
Reply select_reply(const KnowledgeGraph& graph, const SpeakerId& speaker, Strategy strategy,
                   std::optional<Label> input_label, std::uint64_t seed, const ReplyOptions& options = {});

struct ChatConfig {
    bool use_node_label = false;  // follow the matched speaker node's label instead of classifying the input
    bool sample_member = false;
    double gamma = kDefaultDecay;
    std::size_t workers = 0;
};

/// nearest_speaker then select_reply. FollowEmotion needs a classifier unless
/// use_node_label is set.
Reply chat(const RetrievalIndex& index, const KnowledgeGraph& graph, const Encoder& encoder,
           const EmotionClassifier* classifier, std::string_view input, Strategy strategy, std::uint64_t seed,
           const ChatConfig& config = {});

}  // namespace afec
