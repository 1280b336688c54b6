#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "afec/clustering.hpp"
#include "afec/embedding.hpp"
#include "afec/taxonomy.hpp"
#include "afec/text.hpp"

namespace afec {

inline constexpr int kGraphFormatVersion = 1;

// Distinct id types keep speaker and listener ids from being swapped, so an
// edge can only ever join a speaker to a listener.
template <Role R>
struct NodeId {
    std::string value;

    NodeId() = default;
    explicit NodeId(std::string v) : value(std::move(v)) {}
    auto operator<=>(const NodeId&) const = default;
};

using SpeakerId = NodeId<Role::Speaker>;
using ListenerId = NodeId<Role::Listener>;

template <Role R>
struct Node {
    NodeId<R> id;
    std::vector<Utterance> utterances;  // ascending key
    std::string representative;
    std::optional<Label> label;
    EmbeddingVector vector;  // of the representative; empty when the graph carries no vectors

    bool operator==(const Node&) const = default;
};

using SpeakerNode = Node<Role::Speaker>;
using ListenerNode = Node<Role::Listener>;

struct Edge {
    SpeakerId speaker;
    ListenerId listener;
    std::size_t support = 1;

    bool operator==(const Edge&) const = default;
};

struct StageCount {
    std::string stage;
    std::size_t input = 0;
    std::size_t rejected = 0;
    std::size_t output = 0;

    bool operator==(const StageCount&) const = default;
};

struct GraphManifest {
    int format_version = kGraphFormatVersion;
    EncoderBinding encoder;
    double speaker_threshold = kSpeakerThreshold;
    double listener_threshold = kListenerThreshold;
    std::int64_t build_timestamp = 0;
    std::uint64_t seed = 0;
    std::string labeler;  // "name/version" of the classifier, empty until labeled
    std::vector<StageCount> stages;
    // Filled in by KnowledgeGraph from its contents.
    std::size_t speaker_count = 0;
    std::size_t listener_count = 0;
    std::size_t edge_count = 0;

    bool operator==(const GraphManifest&) const = default;
};

nlohmann::json manifest_to_json(const GraphManifest& manifest);
GraphManifest manifest_from_json(const nlohmann::json& obj);

class KnowledgeGraph {
public:
    KnowledgeGraph() = default;
    /// Sorts nodes and edges by id. Throws GraphError on empty or wrong-role
    /// nodes, duplicate ids, duplicate or zero-support edges, and dangling endpoints.
    KnowledgeGraph(std::vector<SpeakerNode> speakers, std::vector<ListenerNode> listeners, std::vector<Edge> edges,
                   GraphManifest manifest = {});

    const std::vector<SpeakerNode>& speakers() const noexcept { return speakers_; }
    const std::vector<ListenerNode>& listeners() const noexcept { return listeners_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const GraphManifest& manifest() const noexcept { return manifest_; }
    GraphManifest& manifest() noexcept { return manifest_; }

    const SpeakerNode* find(const SpeakerId& id) const noexcept;
    const ListenerNode* find(const ListenerId& id) const noexcept;
    // Throw LookupError on unknown ids.
    const SpeakerNode& speaker(const SpeakerId& id) const;
    const ListenerNode& listener(const ListenerId& id) const;
    std::size_t index_of(const SpeakerId& id) const;
    std::size_t index_of(const ListenerId& id) const;

    /// Number of distinct speaker nodes with an edge into `id`.
    std::size_t in_degree(const ListenerId& id) const;
    std::size_t in_degree_at(std::size_t listener_index) const { return in_degree_[listener_index]; }
    /// Listener nodes linked from `id`, ascending listener id.
    std::vector<const ListenerNode*> neighbors(const SpeakerId& id) const;
    std::vector<const Edge*> out_edges(const SpeakerId& id) const;
    std::vector<const Edge*> in_edges(const ListenerId& id) const;

    // Relabeling is the only mutation after build.
    void set_label(const SpeakerId& id, Label label);
    void set_label(const ListenerId& id, Label label);
    void set_speaker_label(std::size_t index, Label label) { speakers_.at(index).label = label; }
    void set_listener_label(std::size_t index, Label label) { listeners_.at(index).label = label; }

    bool has_vectors() const noexcept;
    bool fully_labeled() const noexcept;

    bool operator==(const KnowledgeGraph& other) const {
        return speakers_ == other.speakers_ && listeners_ == other.listeners_ && edges_ == other.edges_ &&
               manifest_ == other.manifest_;
    }

private:
    std::vector<SpeakerNode> speakers_;
    std::vector<ListenerNode> listeners_;
    std::vector<Edge> edges_;
    GraphManifest manifest_;
    std::unordered_map<std::string, std::size_t> speaker_index_;
    std::unordered_map<std::string, std::size_t> listener_index_;
    std::vector<std::vector<std::size_t>> out_;  // speaker index -> edge indices
    std::vector<std::vector<std::size_t>> in_;   // listener index -> edge indices
    std::vector<std::size_t> in_degree_;
};

/// One original conversation pair, by utterance key.
struct UtterancePair {
    std::string speaker_key;
    std::string listener_key;

    bool operator==(const UtterancePair&) const = default;
};

struct BuildStats {
    std::size_t pairs = 0;
    std::size_t linked = 0;   // both sides clustered; equals the total edge support
    std::size_t dropped = 0;  // at least one side filtered out before clustering
};

/// Node i of each side comes from cluster i, with id "S"/"L" plus the index.
/// An edge joins S and L for every pair bridging a member of S and a member
/// of L; support counts those pairs. `vectors` maps utterance keys to vectors
/// and may be empty. Throws GraphError on cluster members missing from
/// `utterances`, on overlapping clusters, and on role mismatches.
KnowledgeGraph build_graph(const std::vector<Cluster>& speaker_clusters, const std::vector<Cluster>& listener_clusters,
                           const std::vector<Utterance>& utterances, const std::vector<UtterancePair>& pairs,
                           const VectorMatrix& vectors, GraphManifest manifest = {}, BuildStats* stats = nullptr);

/// Directory with manifest.json, speakers.jsonl, listeners.jsonl, edges.jsonl
/// and, when nodes carry vectors, speaker_vectors.bin and listener_vectors.bin.
void save_graph(const KnowledgeGraph& graph, const std::filesystem::path& dir);
/// Throws LoadError on version mismatch, malformed or truncated files, and
/// broken references.
KnowledgeGraph load_graph(const std::filesystem::path& dir);

struct GraphStats {
    std::size_t speakers = 0;
    std::size_t listeners = 0;
    std::size_t edges = 0;
    std::size_t total_support = 0;
    std::size_t utterances = 0;
    std::size_t isolated_speakers = 0;
    std::size_t isolated_listeners = 0;
    std::map<std::size_t, std::size_t> listener_in_degree;  // degree -> listener count
    std::map<std::size_t, std::size_t> speaker_out_degree;  // degree -> speaker count
};

GraphStats graph_stats(const KnowledgeGraph& graph);
nlohmann::json stats_to_json(const GraphStats& stats);
std::string format_stats(const GraphStats& stats);

}  // namespace afec
