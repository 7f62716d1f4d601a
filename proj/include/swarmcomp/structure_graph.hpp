#pragma once

#include <optional>
#include <random>

#include "swarmcomp/score.hpp"

namespace sc {

struct DegenerateGraph : std::runtime_error {
    explicit DegenerateGraph(const std::string& what) : std::runtime_error(what) {}
};

/// Time-ordered feature frames: 12-dim duration-weighted chroma plus a
/// 1-dim onset-count block, each block L2-normalized, concatenated.
struct FeatureFrames {
    double frame_len = 1.0;  // beats
    std::vector<std::array<double, 13>> frames;
};

struct GraphEdge {
    int u = 0;
    int v = 0;
    double w = 0.0;
};

/// Undirected weighted graph over time-ordered frame nodes 0..n-1.
struct SimilarityGraph {
    int n = 0;
    std::vector<GraphEdge> edges;
    int k = 0;                 // construction record
    std::string source = "knn";

    std::vector<std::vector<std::pair<int, double>>> adjacency() const;
};

struct GraphMetricsReport {
    int nodes = 0;
    int edge_count = 0;
    double density = 0.0;
    int components = 0;
    int giant_size = 0;
    double clustering = 0.0;
    double transitivity = 0.0;
    double assortativity = 0.0;
    double modularity = 0.0;
    std::vector<int> communities;
    double mean_betweenness = 0.0;
    std::vector<double> betweenness;
    double aspl_weighted = 0.0;            // giant component, lengths 1/w
    std::optional<double> small_world_sigma;
    double degree_entropy = 0.0;
    bool degenerate = false;

    json to_json() const;
};

struct DegreeFitModel {
    std::string name;
    double loglik = 0.0;
    double aic = 0.0;
    double ks = 0.0;
    json params;
    bool skipped = false;
    bool zero_variance = false;
};

struct DegreeFitReport {
    DegreeFitModel poisson;
    DegreeFitModel lognormal;
    DegreeFitModel power_law;

    json to_json() const;
};

struct LongRangeMetrics {
    double lr_ef = 0.0;     // long-range edge weight fraction
    double lr_eff = 0.0;    // long-range efficiency
    double cpt = 0.0;       // community temporal persistence
    double ele = 0.0;       // edge-lag entropy
    double evenness = 0.0;  // 1 - Gini(betweenness)
    double pc = 0.0;        // mean participation coefficient
    bool no_distant_pairs = false;

    json to_json() const;
};

struct NoveltyResult {
    std::vector<double> curve;   // one value per frame (borders zero)
    std::vector<int> peaks;      // frame indices
    double peak_density = 0.0;   // peaks / frames
};

// ---------------------------------------------------------------------------
// Pipeline

FeatureFrames frame_features(const Piece& piece, double frame_len = 1.0);

/// Cosine self-similarity; zero-vector frames are similar to nothing
/// (including themselves).
std::vector<std::vector<double>> build_ssm(const FeatureFrames& frames);

/// Union k-NN rule: edge (i,j) iff j is in i's top-k or i in j's top-k;
/// similarity ties break toward the lower index.
SimilarityGraph knn_graph(const std::vector<std::vector<double>>& ssm, int k = 6);

GraphMetricsReport graph_metrics(const SimilarityGraph& g, int n_null = 20,
                                 std::uint64_t seed = 0);

NoveltyResult js_novelty(const FeatureFrames& frames, int window = 4, int peak_min_dist = 2);

DegreeFitReport degree_fit(const SimilarityGraph& g);

LongRangeMetrics longrange_metrics(const SimilarityGraph& g, const std::vector<int>& communities);
LongRangeMetrics longrange_metrics(const SimilarityGraph& g);

// ---------------------------------------------------------------------------
// Building blocks (exposed for reuse and targeted tests)

std::vector<int> connected_components(const SimilarityGraph& g);  // component id per node
double average_clustering(const SimilarityGraph& g);
double transitivity(const SimilarityGraph& g);
double degree_assortativity(const SimilarityGraph& g);

/// CNM-style greedy modularity maximization (unweighted). Returns
/// (modularity, community id per node).
std::pair<double, std::vector<int>> greedy_modularity(const SimilarityGraph& g);

/// Brandes betweenness with Dijkstra on edge lengths 1/w (unit lengths when
/// weighted = false). Undirected pair counts (each pair once).
std::vector<double> betweenness_centrality(const SimilarityGraph& g, bool weighted = true);

/// Shortest-path distances from src; lengths 1/w (or 1). Unreachable = inf.
std::vector<double> shortest_paths(const SimilarityGraph& g, int src, bool weighted = true);

/// ASPL over reachable pairs of the giant component.
double average_shortest_path(const SimilarityGraph& g, bool weighted);

double gini(const std::vector<double>& values);

/// Base-2 Jensen-Shannon divergence of two distributions (normalized with
/// epsilon smoothing internally).
double js_divergence(const std::vector<double>& p, const std::vector<double>& q);

/// Seeded Erdos-Renyi G(n, m).
SimilarityGraph gnm_random(int n, int m, std::mt19937_64& rng);

json structure_report(const Piece& piece, double frame_len = 1.0, int k = 6, int n_null = 20,
                      std::uint64_t seed = 0);

}  // namespace sc
