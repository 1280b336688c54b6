#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "afec/embedding.hpp"
#include "afec/text.hpp"

namespace afec {

struct ClusterParams {
    double threshold = 0.85;  // 0.80 is the listener default
    std::size_t min_community_size = 1;
    // Carried for provenance; extraction is fully deterministic and draws nothing.
    std::uint64_t seed = 0;
    std::string id_prefix = "c";
    std::size_t workers = 0;  // 0 = hardware concurrency
};

inline constexpr double kSpeakerThreshold = 0.85;
inline constexpr double kListenerThreshold = 0.80;
inline constexpr std::size_t kBruteForceLimit = 10000;
inline constexpr std::size_t kMaxClusterTokens = 40;

struct Cluster {
    std::string id;
    std::vector<std::string> member_ids;  // ascending
    std::string representative_id;        // member with the largest summed similarity to the others
    EmbeddingVector centroid;             // normalized mean of the members

    bool operator==(const Cluster&) const = default;
};

/// Threshold community detection. Every element seeds a candidate community
/// of all elements with similarity >= threshold; communities are taken in
/// (size desc, seed id asc) order, dropping already-claimed members, and
/// leftovers become singletons. Vectors must be unit-norm with unique ids.
std::vector<Cluster> fast_community_detect(const VectorMatrix& vectors, const ClusterParams& params);

/// Same rules via a dense O(n^2) similarity matrix. Verification oracle;
/// throws std::invalid_argument above kBruteForceLimit elements.
std::vector<Cluster> brute_force_cluster(const VectorMatrix& vectors, const ClusterParams& params);

/// Clusters each half (by id order) separately, then clusters the phase-1
/// centroids and merges phase-1 clusters that share a phase-2 community.
std::vector<Cluster> two_phase_cluster(const VectorMatrix& vectors, const ClusterParams& params);

/// Only utterances with at most `max_tokens` tokens are clustered.
struct LengthGuardResult {
    std::vector<Utterance> kept;
    std::vector<Utterance> dropped;
};
LengthGuardResult apply_length_guard(std::vector<Utterance> utterances, std::size_t max_tokens = kMaxClusterTokens);

// Clusters file: one JSON object per line, {"id", "representative_id", "member_ids"}.
void write_clusters(std::ostream& out, const std::vector<Cluster>& clusters);
void write_clusters(const std::filesystem::path& path, const std::vector<Cluster>& clusters);
std::vector<Cluster> read_clusters(std::istream& in);
std::vector<Cluster> read_clusters(const std::filesystem::path& path);

}  // namespace afec
