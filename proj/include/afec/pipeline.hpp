#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "afec/clustering.hpp"
#include "afec/condense.hpp"
#include "afec/corpus.hpp"
#include "afec/embedding.hpp"
#include "afec/kgraph.hpp"
#include "afec/text.hpp"

namespace afec {

enum class ClusterMode { Fast, TwoPhase };

ClusterMode parse_cluster_mode(std::string_view name);
std::string_view cluster_mode_name(ClusterMode mode);

// One INI file drives a run; each struct is one [section].
struct InputConfig {
    std::filesystem::path submissions;
    std::filesystem::path comments;
    std::string from;  // empty = unbounded
    std::string to;
    bool strip_type_prefixes = true;
    std::string default_source = "reddit";
};

struct CurateConfig {
    ValidationOptions validation;
    std::string analyzer = "baseline";
    bool summarize_listeners = true;
    bool listener_root_filter = false;
    std::size_t max_tokens = kMaxClusterTokens;
};

struct EmbedConfig {
    std::string encoder = "baseline";
    std::size_t dimension = 768;
};

struct ClusterConfig {
    double speaker_threshold = kSpeakerThreshold;
    double listener_threshold = kListenerThreshold;
    ClusterMode speaker_mode = ClusterMode::Fast;
    ClusterMode listener_mode = ClusterMode::TwoPhase;
    std::size_t min_community_size = 1;
};

struct LabelConfig {
    std::string classifier = "baseline";
    double gamma = 0.6;
};

struct OutputConfig {
    std::filesystem::path graph_dir = "out/graph";
    std::filesystem::path work_dir = "out/work";
    std::optional<std::int64_t> build_timestamp;  // default: newest input record
};

struct PipelineConfig {
    InputConfig input;
    CurateConfig curate;
    EmbedConfig embed;
    ClusterConfig cluster;
    LabelConfig label;
    OutputConfig output;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
};

/// Relative paths resolve against `base` (normally the config file's directory).
/// Throws std::invalid_argument on unknown keys or bad values.
PipelineConfig parse_config(std::istream& in, const std::filesystem::path& base = {});
PipelineConfig load_config(const std::filesystem::path& path);

struct RejectRecord {
    std::string source_id;
    Role role = Role::Speaker;
    std::string rule;
    std::string text;
};

struct IngestResult {
    std::vector<Thread> threads;
    std::vector<StageCount> stages;
};

IngestResult ingest(const InputConfig& config);

struct CurateResult {
    std::vector<Utterance> utterances;  // speakers then listeners, each in thread order
    std::vector<RejectRecord> rejects;
    std::vector<StageCount> stages;
};

/// Speakers: clean title and body, then summarize and root-check (title
/// first). Listeners: clean, summarize multi-sentence replies, optionally
/// root-check. Both sides then pass the length guard.
CurateResult curate(const std::vector<Thread>& threads, const CurateConfig& config, const SyntaxAnalyzer& analyzer,
                    std::size_t workers = 0);

/// One pair per direct reply, by utterance key.
std::vector<UtterancePair> utterance_pairs(const std::vector<Thread>& threads);

/// Vectors keyed by utterance key, in input order.
VectorMatrix embed_utterances(const std::vector<Utterance>& utterances, const Encoder& encoder);

/// Clusters the vectors whose key belongs to `role`.
std::vector<Cluster> cluster_role(const VectorMatrix& vectors, Role role, double threshold, ClusterMode mode,
                                  std::size_t min_community_size = 1, std::uint64_t seed = 0, std::size_t workers = 0);

// Utterance file: one {"id", "origin", "role", "text"} object per line.
void write_utterances(const std::filesystem::path& path, const std::vector<Utterance>& utterances);
std::vector<Utterance> read_utterances(const std::filesystem::path& path);
// Rejects file: one {"role", "rule", "source_id", "text"} object per line.
void write_rejects(const std::filesystem::path& path, const std::vector<RejectRecord>& rejects);

struct PipelineResult {
    std::filesystem::path graph_dir;
    std::vector<StageCount> stages;
    GraphStats stats;
};

/// ingest -> curate -> embed -> cluster -> build -> label -> save. Each
/// stage leaves its output in the work dir; a failure throws PipelineError
/// naming the stage and keeps whatever was written before it.
PipelineResult run_pipeline(const PipelineConfig& config);

/// FNV-1a over the names and bytes of every file in `dir`, in name order.
std::string directory_digest(const std::filesystem::path& dir);

}  // namespace afec
