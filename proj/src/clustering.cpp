#include "afec/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "afec/errors.hpp"
#include "afec/parallel.hpp"

using json = nlohmann::json;

namespace afec {

namespace {

// Pruning slack: far above accumulated rounding error of a 768-dim dot.
constexpr double kPruneMargin = 1e-6;

void check_params(const ClusterParams& params) {
    if (!(params.threshold > 0.0 && params.threshold <= 1.0))
        throw std::invalid_argument("cluster threshold must lie in (0, 1]");
    if (params.min_community_size == 0) throw std::invalid_argument("min_community_size must be positive");
}

// Indices of `vectors` in ascending id order; rejects duplicate ids and
// vectors that are not unit length.
std::vector<std::size_t> id_order(const VectorMatrix& vectors) {
    std::vector<std::size_t> order(vectors.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vectors.id(a) < vectors.id(b); });
    for (std::size_t k = 1; k < order.size(); ++k)
        if (vectors.id(order[k]) == vectors.id(order[k - 1]))
            throw std::invalid_argument("duplicate vector id: " + vectors.id(order[k]));
    for (std::size_t i = 0; i < vectors.size(); ++i)
        if (std::abs(std::sqrt(dot(vectors.row(i), vectors.row(i))) - 1.0) > 1e-3)
            throw std::invalid_argument("vector " + vectors.id(i) + " is not unit-norm");
    return order;
}

VectorMatrix reorder(const VectorMatrix& vectors, const std::vector<std::size_t>& order) {
    VectorMatrix out(vectors.dim());
    out.reserve(order.size());
    for (auto i : order) out.add(vectors.id(i), vectors.row(i));
    return out;
}

std::string cluster_id(const std::string& prefix, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%08zu", index);
    return prefix + buf;
}

// Members are indices into an id-sorted matrix, so ascending index is ascending id.
Cluster finalize(const VectorMatrix& sorted, std::vector<std::size_t> members, std::string id) {
    std::sort(members.begin(), members.end());
    const std::size_t dim = sorted.dim();
    std::vector<double> sum(dim, 0.0);
    for (auto m : members) {
        auto r = sorted.row(m);
        for (std::size_t d = 0; d < dim; ++d) sum[d] += static_cast<double>(r[d]);
    }
    std::size_t best = members.front();
    double best_score = -std::numeric_limits<double>::infinity();
    for (auto m : members) {
        auto r = sorted.row(m);
        double s = 0.0;
        for (std::size_t d = 0; d < dim; ++d) s += static_cast<double>(r[d]) * sum[d];
        s -= dot(r, r);
        if (s > best_score) {
            best_score = s;
            best = m;
        }
    }
    Cluster c;
    c.id = std::move(id);
    c.representative_id = sorted.id(best);
    c.centroid = normalized(sum);
    c.member_ids.reserve(members.size());
    for (auto m : members) c.member_ids.push_back(sorted.id(m));
    return c;
}

// Shared tail of both detectors: communities (seed, members) already sorted
// into extraction order.
std::vector<std::vector<std::size_t>> extract(const std::vector<std::pair<std::size_t, std::vector<std::uint32_t>>>& communities,
                                              std::size_t n, std::size_t min_size) {
    std::vector<char> claimed(n, 0);
    std::vector<std::vector<std::size_t>> out;
    for (const auto& [seed, members] : communities) {
        std::vector<std::size_t> fresh;
        for (auto m : members)
            if (!claimed[m]) fresh.push_back(m);
        if (fresh.empty() || fresh.size() < min_size) continue;
        for (auto m : fresh) claimed[m] = 1;
        out.push_back(std::move(fresh));
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!claimed[i]) out.push_back({i});
    return out;
}

std::vector<Cluster> detect_sorted(const VectorMatrix& sorted, const ClusterParams& params) {
    const std::size_t n = sorted.size();
    const std::size_t dim = sorted.dim();
    const double t = params.threshold;
    const std::size_t head = dim / 4;

    // Tail norms for the Cauchy-Schwarz bound on the unseen part of a dot product.
    std::vector<double> tail(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = sorted.row(i).subspan(head);
        tail[i] = std::sqrt(dot(r, r));
    }

    const std::size_t workers = params.workers ? params.workers : default_workers();
    const std::size_t blocks = std::max<std::size_t>(1, std::min(n, workers * 4));
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> found(blocks);
    const std::size_t rows_per_block = n == 0 ? 0 : (n + blocks - 1) / blocks;
    parallel_blocks(blocks, workers, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
            const std::size_t lo = b * rows_per_block;
            const std::size_t hi = std::min(n, lo + rows_per_block);
            for (std::size_t i = lo; i < hi; ++i) {
                auto ri = sorted.row(i);
                auto ri_head = ri.first(head);
                for (std::size_t j = i + 1; j < n; ++j) {
                    auto rj = sorted.row(j);
                    if (head > 0 && dot(ri_head, rj.first(head)) + tail[i] * tail[j] + kPruneMargin < t) continue;
                    if (dot(ri, rj) >= t) found[b].emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
                }
            }
        }
    });

    std::vector<std::vector<std::uint32_t>> neighbors(n);
    for (std::size_t i = 0; i < n; ++i) neighbors[i].push_back(static_cast<std::uint32_t>(i));
    for (const auto& block : found)
        for (auto [i, j] : block) {
            neighbors[i].push_back(j);
            neighbors[j].push_back(i);
        }

    std::vector<std::pair<std::size_t, std::vector<std::uint32_t>>> communities;
    communities.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (neighbors[i].size() < params.min_community_size) continue;
        std::sort(neighbors[i].begin(), neighbors[i].end());
        communities.emplace_back(i, std::move(neighbors[i]));
    }
    std::sort(communities.begin(), communities.end(), [](const auto& a, const auto& b) {
        if (a.second.size() != b.second.size()) return a.second.size() > b.second.size();
        return a.first < b.first;
    });

    auto groups = extract(communities, n, params.min_community_size);
    std::vector<Cluster> out;
    out.reserve(groups.size());
    for (std::size_t k = 0; k < groups.size(); ++k)
        out.push_back(finalize(sorted, std::move(groups[k]), cluster_id(params.id_prefix, k)));
    return out;
}

}  // namespace

std::vector<Cluster> fast_community_detect(const VectorMatrix& vectors, const ClusterParams& params) {
    check_params(params);
    if (vectors.empty()) return {};
    return detect_sorted(reorder(vectors, id_order(vectors)), params);
}

std::vector<Cluster> brute_force_cluster(const VectorMatrix& vectors, const ClusterParams& params) {
    check_params(params);
    if (vectors.size() > kBruteForceLimit)
        throw std::invalid_argument("brute_force_cluster: input exceeds " + std::to_string(kBruteForceLimit) +
                                    " elements");
    if (vectors.empty()) return {};
    const VectorMatrix sorted = reorder(vectors, id_order(vectors));
    const std::size_t n = sorted.size();

    // Full matrix, both triangles computed independently.
    std::vector<char> similar(n * n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) similar[i * n + j] = (i == j) || dot(sorted.row(i), sorted.row(j)) >= params.threshold;

    std::vector<std::pair<std::size_t, std::vector<std::uint32_t>>> communities;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::uint32_t> members;
        for (std::size_t j = 0; j < n; ++j)
            if (similar[i * n + j]) members.push_back(static_cast<std::uint32_t>(j));
        if (members.size() >= params.min_community_size) communities.emplace_back(i, std::move(members));
    }
    std::stable_sort(communities.begin(), communities.end(),
                     [](const auto& a, const auto& b) { return a.second.size() > b.second.size(); });

    std::set<std::size_t> claimed;
    std::vector<Cluster> out;
    for (const auto& [seed, members] : communities) {
        std::vector<std::size_t> fresh;
        std::copy_if(members.begin(), members.end(), std::back_inserter(fresh),
                     [&](std::size_t m) { return !claimed.contains(m); });
        if (fresh.empty() || fresh.size() < params.min_community_size) continue;
        claimed.insert(fresh.begin(), fresh.end());
        out.push_back(finalize(sorted, std::move(fresh), cluster_id(params.id_prefix, out.size())));
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!claimed.contains(i)) out.push_back(finalize(sorted, {i}, cluster_id(params.id_prefix, out.size())));
    return out;
}

std::vector<Cluster> two_phase_cluster(const VectorMatrix& vectors, const ClusterParams& params) {
    check_params(params);
    if (vectors.empty()) return {};
    const auto order = id_order(vectors);
    const VectorMatrix sorted = reorder(vectors, order);
    const std::size_t n = sorted.size();
    const std::size_t half = (n + 1) / 2;

    // Phase 1: halves one after the other, so only one workspace is live.
    ClusterParams phase = params;
    std::vector<std::vector<std::size_t>> phase1_members;
    VectorMatrix centroids(sorted.dim());
    std::map<std::string, std::size_t> sorted_index;
    for (std::size_t i = 0; i < n; ++i) sorted_index.emplace(sorted.id(i), i);
    for (auto [lo, hi] : {std::pair{std::size_t{0}, half}, std::pair{half, n}}) {
        if (lo == hi) continue;
        VectorMatrix part(sorted.dim());
        part.reserve(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) part.add(sorted.id(i), sorted.row(i));
        for (auto& c : detect_sorted(part, phase)) {
            std::vector<std::size_t> members;
            for (const auto& id : c.member_ids) members.push_back(sorted_index.at(id));
            centroids.add(cluster_id("p", phase1_members.size()), c.centroid);
            phase1_members.push_back(std::move(members));
        }
    }

    // Phase 2 over centroids; "p" ids are already in phase-1 order.
    phase.min_community_size = 1;
    phase.id_prefix = "p";
    const auto merged = detect_sorted(centroids, phase);

    std::vector<Cluster> out;
    out.reserve(merged.size());
    for (const auto& group : merged) {
        std::vector<std::size_t> members;
        for (const auto& pid : group.member_ids) {
            const auto& part = phase1_members[std::stoul(pid.substr(1))];
            members.insert(members.end(), part.begin(), part.end());
        }
        out.push_back(finalize(sorted, std::move(members), cluster_id(params.id_prefix, out.size())));
    }
    return out;
}

LengthGuardResult apply_length_guard(std::vector<Utterance> utterances, std::size_t max_tokens) {
    LengthGuardResult r;
    for (auto& u : utterances) (u.tokens.size() <= max_tokens ? r.kept : r.dropped).push_back(std::move(u));
    return r;
}

void write_clusters(std::ostream& out, const std::vector<Cluster>& clusters) {
    for (const auto& c : clusters)
        out << json{{"id", c.id}, {"representative_id", c.representative_id}, {"member_ids", c.member_ids}}.dump()
            << '\n';
}

void write_clusters(const std::filesystem::path& path, const std::vector<Cluster>& clusters) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write clusters file: " + path.string());
    write_clusters(out, clusters);
}

std::vector<Cluster> read_clusters(std::istream& in) {
    std::vector<Cluster> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object() || !obj.contains("id") || !obj.contains("member_ids"))
            throw LoadError("malformed cluster record at line " + std::to_string(line_no));
        Cluster c;
        c.id = obj["id"].get<std::string>();
        c.representative_id = obj.value("representative_id", std::string{});
        c.member_ids = obj["member_ids"].get<std::vector<std::string>>();
        if (c.member_ids.empty()) throw LoadError("empty cluster at line " + std::to_string(line_no));
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<Cluster> read_clusters(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open clusters file: " + path.string());
    return read_clusters(in);
}

}  // namespace afec
