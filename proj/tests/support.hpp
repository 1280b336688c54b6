#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "afec/embedding.hpp"
#include "afec/kgraph.hpp"
#include "afec/rng.hpp"
#include "afec/taxonomy.hpp"
#include "afec/text.hpp"

namespace afec::testing {

inline std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(AFEC_TEST_DATA) / name; }
inline std::filesystem::path mini_corpus_dir() { return std::filesystem::path(AFEC_MINI_CORPUS); }

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Removed on scope exit. Names are unique per process and tag.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("afec-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::vector<float> gaussian(Rng& rng, std::size_t dim) {
    std::vector<float> v(dim);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    return v;
}

inline std::vector<float> unit(std::vector<float> v) {
    double s = 0;
    for (float x : v) s += double(x) * x;
    const double n = std::sqrt(s);
    for (auto& x : v) x = static_cast<float>(x / n);
    return v;
}

inline std::string row_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "u%06zu", i);
    return buf;
}

inline VectorMatrix random_unit_matrix(std::size_t n, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    VectorMatrix m(dim);
    m.reserve(n);
    for (std::size_t i = 0; i < n; ++i) m.add(row_id(i), unit(gaussian(rng, dim)));
    return m;
}

// Noisy copies of a few centers, some exact duplicates, rows shuffled so ids
// and groups do not line up.
inline VectorMatrix clustered_matrix(std::size_t n, std::size_t dim, std::size_t centers, double noise,
                                     std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<float>> c;
    for (std::size_t k = 0; k < centers; ++k) c.push_back(unit(gaussian(rng, dim)));
    std::vector<std::vector<float>> rows;
    for (std::size_t i = 0; i < n; ++i) {
        if (!rows.empty() && rng.uniform_real() < 0.05) {
            rows.push_back(rows[rng.uniform_index(rows.size())]);
            continue;
        }
        auto v = c[rng.uniform_index(centers)];
        const double scale = noise / std::sqrt(double(dim));
        for (auto& x : v) x += static_cast<float>(scale * rng.normal());
        rows.push_back(unit(std::move(v)));
    }
    for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[rng.uniform_index(i)]);
    VectorMatrix m(dim);
    for (std::size_t i = 0; i < rows.size(); ++i) m.add(row_id(i), rows[i]);
    return m;
}

struct Planted {
    VectorMatrix vectors;
    std::vector<std::vector<std::string>> groups;  // ids per planted group, ascending
};

// `groups` mutually orthogonal centers; members sit at small noise around them.
inline Planted planted_partition(std::size_t groups, std::size_t per_group, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> basis;
    while (basis.size() < groups) {
        std::vector<double> v(dim);
        for (auto& x : v) x = rng.normal();
        for (const auto& b : basis) {
            double d = 0;
            for (std::size_t i = 0; i < dim; ++i) d += v[i] * b[i];
            for (std::size_t i = 0; i < dim; ++i) v[i] -= d * b[i];
        }
        double s = 0;
        for (double x : v) s += x * x;
        for (auto& x : v) x /= std::sqrt(s);
        basis.push_back(std::move(v));
    }
    // Interleave group members so both halves of the id order see every group.
    Planted p{VectorMatrix(dim), std::vector<std::vector<std::string>>(groups)};
    for (std::size_t i = 0; i < groups * per_group; ++i) {
        const std::size_t g = (i * 7 + i / groups) % groups;
        std::vector<float> v(dim);
        for (std::size_t k = 0; k < dim; ++k)
            v[k] = static_cast<float>(basis[g][k] + 0.12 / std::sqrt(double(dim)) * rng.normal());
        p.vectors.add(row_id(i), unit(std::move(v)));
        p.groups[g].push_back(row_id(i));
    }
    return p;
}

template <Role R>
Node<R> make_node(const std::string& id, const std::string& text, std::optional<Label> label = std::nullopt,
                  const std::string& origin = "test") {
    Node<R> n;
    n.id = NodeId<R>(id);
    n.utterances.push_back(make_utterance(text, R, id + "-u", origin));
    n.representative = text;
    n.label = label;
    return n;
}

inline SpeakerNode speaker_node(const std::string& id, const std::string& text, std::optional<Label> label = {},
                                const std::string& origin = "test") {
    return make_node<Role::Speaker>(id, text, label, origin);
}

inline ListenerNode listener_node(const std::string& id, const std::string& text, std::optional<Label> label = {}) {
    return make_node<Role::Listener>(id, text, label);
}

inline Label random_label(Rng& rng) { return all_labels()[rng.uniform_index(kLabelCount)]; }

// A small labeled bipartite graph with random edges; every speaker has at
// least one listener.
inline KnowledgeGraph random_graph(Rng& rng) {
    const std::size_t ns = 1 + rng.uniform_index(4);
    const std::size_t nl = 1 + rng.uniform_index(10);
    std::vector<SpeakerNode> speakers;
    std::vector<ListenerNode> listeners;
    std::vector<Edge> edges;
    for (std::size_t l = 0; l < nl; ++l) {
        // Skew toward a few labels so matching and non-matching pools both occur.
        const Label label = rng.uniform_real() < 0.5 ? all_labels()[rng.uniform_index(6) * 7 % kLabelCount]
                                                     : random_label(rng);
        listeners.push_back(listener_node("L" + std::to_string(l), "reply " + std::to_string(l), label));
    }
    for (std::size_t s = 0; s < ns; ++s) {
        speakers.push_back(speaker_node("S" + std::to_string(s), "post " + std::to_string(s), random_label(rng)));
        std::vector<bool> used(nl, false);
        const std::size_t deg = 1 + rng.uniform_index(nl);
        for (std::size_t k = 0; k < deg; ++k) {
            const std::size_t l = rng.uniform_index(nl);
            if (used[l]) continue;
            used[l] = true;
            edges.push_back({SpeakerId("S" + std::to_string(s)), ListenerId("L" + std::to_string(l)),
                             1 + rng.uniform_index(3)});
        }
    }
    return KnowledgeGraph(std::move(speakers), std::move(listeners), std::move(edges));
}

}  // namespace afec::testing
